import json

import numpy as np
import pytest

from hrgraph.kgraph import CubicalCocycle, FactorisationRule, block_keys, enumerate_factorisations, flip_factorisation
from hrgraph.skeleton import from_adjacency, single_vertex
from hrgraph.unitary_cocycle import (
    CocycleFormatError,
    UnitaryCocycle,
    assemble_block,
    cocycle_residual,
    domain_gauge,
    flip_cocycle,
    from_kgraph,
    gauge_transform,
    is_cocycle,
    random_cocycle,
    random_gauge,
    random_unitary,
    residual_euclidean_gradient,
    residual_report,
)

from oracles import kron_residual


def sv_blocks(U):
    n = U.skeleton.k
    return {(i - 1, j - 1): U[(i, j, "v", "v")] for i in range(1, n + 1) for j in range(i + 1, n + 1)}


def counts(s):
    return [len(s.edges_of_color(c)) for c in s.colors]


def test_flip_2_3_is_the_tensor_swap():
    s = single_vertex((2, 3))
    U = flip_cocycle(s, flip_factorisation(s))
    b = U[(1, 2, "v", "v")]
    assert b.shape == (6, 6)
    # domain basis b_q a_p (index 2q + p), codomain basis a_p b_q (index 3p + q)
    for p in range(2):
        for q in range(3):
            col = np.zeros(6)
            col[3 * p + q] = 1
            assert np.array_equal(b[:, 2 * q + p], col)


def test_assemble_block_examples():
    s = single_vertex((2, 2))
    A = random_unitary(4, np.random.default_rng(1))
    assert np.array_equal(assemble_block(s, 1, 2, {("v", "v"): A}), A)
    two = from_adjacency([[[2, 0], [0, 2]], [[2, 0], [0, 2]]], vertices=["u", "w"])
    B = random_unitary(4, np.random.default_rng(2))
    full = assemble_block(two, 1, 2, {("u", "u"): A, ("w", "w"): B})
    assert full.shape == (8, 8)
    assert np.array_equal(full[:4, :4], A) and np.array_equal(full[4:, 4:], B)
    assert not full[:4, 4:].any() and not full[4:, :4].any()
    with pytest.raises(ValueError):
        assemble_block(two, 1, 2, {("u", "u"): A[:3, :3]})


def test_from_kgraph_is_monomial(sv222):
    rules = list(enumerate_factorisations(sv222, limit=40))
    for F in rules:
        U = from_kgraph(sv222, F, CubicalCocycle.constant(sv222, 1j))
        for key, b in U.blocks.items():
            nz = np.abs(b) > 0
            assert (nz.sum(axis=0) == 1).all() and (nz.sum(axis=1) == 1).all()
            assert np.allclose(np.abs(b[nz]), 1)
            # column r is sent to the row given by the factorisation
            assert [int(np.argmax(nz[:, r])) for r in range(b.shape[1])] == list(F.maps[key])


def test_from_kgraph_rejects_invalid_rule(sv222):
    bad = FactorisationRule(sv222, {
        (1, 2, "v", "v"): (1, 0, 2, 3), (1, 3, "v", "v"): (0, 1, 2, 3), (2, 3, "v", "v"): (0, 1, 2, 3)})
    with pytest.raises(ValueError, match="factorisation"):
        from_kgraph(sv222, bad)


def test_residual_matches_kronecker_oracle(rng):
    for n in [(2, 2, 2), (1, 2, 3), (2, 1, 2, 1)]:
        s = single_vertex(n)
        U = random_cocycle(s, rng)
        assert np.isclose(cocycle_residual(U), kron_residual(sv_blocks(U), n), rtol=1e-12)


def test_kronecker_oracle_agrees_on_flip(sv222):
    U = flip_cocycle(sv222, flip_factorisation(sv222))
    assert kron_residual(sv_blocks(U), (2, 2, 2)) == 0
    assert cocycle_residual(U) == 0


def test_enumerated_rules_give_cocycles(sv222):
    rules = list(enumerate_factorisations(sv222))
    for F in rules[::37]:
        U = from_kgraph(sv222, F, CubicalCocycle.constant(sv222, np.exp(2j * np.pi / 3)))
        assert cocycle_residual(U) <= 1e-12
        assert kron_residual(sv_blocks(U), (2, 2, 2)) <= 1e-12


def test_generic_random_blocks_are_not_cocycles(sv222, rng):
    for _ in range(5):
        assert cocycle_residual(random_cocycle(sv222, rng)) > 0.1


def test_k2_has_zero_residual(rng):
    s = single_vertex((2, 3))
    U = random_cocycle(s, rng)
    assert residual_report(U) == {"residual": 0.0, "per_triple": []}
    assert is_cocycle(U)


def test_multi_vertex_flip_and_residual(two_vertex_k3, rng):
    for F in list(enumerate_factorisations(two_vertex_k3, limit=6)):
        assert cocycle_residual(flip_cocycle(two_vertex_k3, F)) <= 1e-12
    assert cocycle_residual(random_cocycle(two_vertex_k3, rng)) > 0.1


def test_residual_report_names_triples(sv222, rng):
    report = residual_report(random_cocycle(sv222, rng))
    (item,) = report["per_triple"]
    assert (item["i"], item["j"], item["l"]) == (1, 2, 3)
    assert np.isclose(item["residual"], report["residual"])


def test_gauge_invariance(sv222, two_vertex_k3, rng):
    for s in (sv222, two_vertex_k3):
        for _ in range(5):
            U = random_cocycle(s, rng)
            V = gauge_transform(U, random_gauge(s, rng))
            assert V.unitarity_defect() < 1e-12
            assert np.isclose(cocycle_residual(V), cocycle_residual(U), rtol=1e-12)


def test_gauge_preserves_cocycles(sv222, rng):
    F = list(enumerate_factorisations(sv222, limit=300))[-1]
    U = from_kgraph(sv222, F)
    V = gauge_transform(U, random_gauge(sv222, rng))
    assert cocycle_residual(V) <= 1e-12
    assert U.distance(V) > 0.1


def test_flip_is_gauge_fixed(sv222, rng):
    U = flip_cocycle(sv222, flip_factorisation(sv222))
    V = gauge_transform(U, random_gauge(sv222, rng))
    assert U.distance(V) < 1e-12


def test_identity_gauge(sv222, rng):
    U = random_cocycle(sv222, rng)
    assert U.distance(gauge_transform(U, {})) == 0
    with pytest.raises(ValueError):
        gauge_transform(U, {(1, "v", "v"): np.eye(3)})


def test_domain_gauge_is_induced_tensor(rng):
    s = single_vertex((2, 3))
    Q = random_gauge(s, rng)
    # domain of U_12 is v E_2 E_1 v: outer color 2
    assert np.allclose(domain_gauge(s, Q, (1, 2, "v", "v")), np.kron(Q[(2, "v", "v")], Q[(1, "v", "v")]))


def test_euclidean_gradient_finite_difference(sv222, rng):
    U = random_cocycle(sv222, rng)
    f, grads = residual_euclidean_gradient(U)
    assert np.isclose(f, cocycle_residual(U) ** 2)
    key = (1, 3, "v", "v")
    d = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = 1e-6
    plus = U.replace({key: U[key] + h * d})
    minus = U.replace({key: U[key] - h * d})
    # replace() does not renormalise, so the residual extends to all matrices
    fd = (cocycle_residual(plus) ** 2 - cocycle_residual(minus) ** 2) / (2 * h)
    assert np.isclose(fd, np.real(np.vdot(grads[key], d)), rtol=1e-6)


def test_round_trip_and_format_errors(two_vertex_k3, rng):
    U = random_cocycle(two_vertex_k3, rng)
    again = UnitaryCocycle.from_dict(two_vertex_k3, json.loads(json.dumps(U.to_dict())))
    assert again.distance(U) == 0
    doc = U.to_dict()
    doc["blocks"][0]["data"] = doc["blocks"][0]["data"][:-1]
    with pytest.raises(CocycleFormatError):
        UnitaryCocycle.from_dict(two_vertex_k3, doc)
    doc = U.to_dict()
    doc["blocks"].pop()
    with pytest.raises(CocycleFormatError, match="missing"):
        UnitaryCocycle.from_dict(two_vertex_k3, doc)


def test_unitarity_defect(sv222):
    U = flip_cocycle(sv222, flip_factorisation(sv222))
    assert U.unitarity_defect() == 0
    W = U.replace({(1, 2, "v", "v"): 1.01 * U[(1, 2, "v", "v")]})
    # Frobenius norm of (1.0201 - 1) I_4
    assert W.unitarity_defect() == pytest.approx(0.0201 * 2, rel=1e-6)


def test_assemble_identity_blocks(two_vertex_k3):
    s = two_vertex_k3
    blocks = {(v, w): np.eye(len(s.paths((1, 2), v, w))) for v, w in s.vertex_pairs()}
    full = assemble_block(s, 1, 2, blocks)
    assert np.array_equal(full, np.eye(len(full)))


def test_assembly_preserves_inner_products_iff_blocks_unitary(rng):
    two = from_adjacency([[[2, 0], [0, 2]], [[2, 0], [0, 2]]], vertices=["u", "w"])
    A, B = random_unitary(4, rng), random_unitary(4, rng)
    x, y = rng.standard_normal(8) + 1j * rng.standard_normal(8), rng.standard_normal(8) + 1j * rng.standard_normal(8)
    full = assemble_block(two, 1, 2, {("u", "u"): A, ("w", "w"): B})
    assert np.isclose(np.vdot(full @ x, full @ y), np.vdot(x, y))
    bent = assemble_block(two, 1, 2, {("u", "u"): A, ("w", "w"): B @ np.diag([1, 1, 1, 1.5])})
    assert not np.isclose(np.vdot(bent @ x, bent @ x), np.vdot(x, x))


def test_from_kgraph_one_by_one_blocks():
    s = single_vertex((1, 1))
    (F,) = list(enumerate_factorisations(s))
    assert np.array_equal(from_kgraph(s, F)[(1, 2, "v", "v")], [[1]])
    z = np.exp(0.4j)
    assert np.allclose(from_kgraph(s, F, CubicalCocycle.constant(s, z))[(1, 2, "v", "v")], [[z]])
    s = single_vertex((1, 1, 1))
    (F,) = list(enumerate_factorisations(s))
    omega = {(1, 2): np.exp(0.3j), (1, 3): np.exp(1.1j), (2, 3): np.exp(-2j)}
    U = from_kgraph(s, F, CubicalCocycle.from_pair_constants(s, omega))
    for (i, j), w in omega.items():
        assert np.allclose(U[(i, j, "v", "v")], [[w]])
    assert cocycle_residual(U) == pytest.approx(0, abs=1e-15)


def test_gauge_by_q_then_inverse(sv222, rng):
    U = random_cocycle(sv222, rng)
    Q = random_gauge(sv222, rng)
    back = gauge_transform(gauge_transform(U, Q), {k: q.conj().T for k, q in Q.items()})
    assert back.distance(U) < 1e-12


def test_equal_gauge_on_every_color(rng):
    s = single_vertex((2, 2, 2))
    for _ in range(5):
        U = random_cocycle(s, rng)
        q = random_unitary(2, rng)
        V = gauge_transform(U, {(c, "v", "v"): q for c in s.colors})
        assert abs(cocycle_residual(V) - cocycle_residual(U)) <= 1e-12 * cocycle_residual(U)
