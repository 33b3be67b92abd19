import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import LAM, MU, OMEGA, example21, scalar_model
from twisted_isometries.equiv import (IntertwinerResult, commutant, defect_operator, equivalence,
                                      glue_global, intertwiner_space, irreducibility_report,
                                      reducing_from_fiber, unitary_equivalent, wandering_data)
from twisted_isometries.errors import NotReducingError, PreconditionError, UnsupportedError
from twisted_isometries.lattice import LatticeSpec, basis_size
from twisted_isometries.linalg import Subspace, dag, op_norm, random_unitary
from twisted_isometries.monomial_ops import TwistedTuple, diag_op, direct_sum, model_tuple, mult_op
from twisted_isometries.scenario import random_model
from twisted_isometries.wold import decompose, restricted_data, subsets


def test_intertwiner_space_examples():
    D = np.diag([1.0, -1.0]).astype(complex)
    B = intertwiner_space([D], [D])
    assert len(B) == 2
    for M in B:
        assert np.allclose(M, np.diag(np.diag(M)))
    assert len(intertwiner_space([np.eye(3)], [np.eye(3)])) == 9
    z = np.zeros((0, 0), dtype=complex)
    assert intertwiner_space([z], [z]) == []


def test_intertwiner_space_orthonormal_and_star_closed():
    X = [random_unitary(3, 1)]
    B = intertwiner_space(X, X)
    G = np.array([[np.vdot(a, b) for b in B] for a in B])
    assert np.allclose(G, np.eye(len(B)))
    # the commutant of one generic unitary is its polynomial algebra
    assert len(B) == 3
    for M in B:
        assert op_norm(dag(M) @ X[0] - X[0] @ dag(M)) < 1e-10


def test_wandering_data_examples():
    tails = {2: np.diag([OMEGA, 1j])}
    twists = {(1, 2): np.diag([LAM, MU])}
    T = model_tuple(LatticeSpec(1, 2, 5), [1], twists, tails, n=2)
    wd = wandering_data(T, (1,))
    assert wd.fiber_dim == 2
    # the wandering basis may differ from the standard one by a unitary
    assert unitary_equivalent(wd, type(wd)((1,), 2, tails, twists)).exists
    s = LatticeSpec(1, 2, 4)
    wd = wandering_data(TwistedTuple([mult_op(s, 1)]), (1,))
    assert wd.fiber_dim == 2 and wd.tail_ops == {} and wd.twist_ops == {}
    wd = wandering_data(scalar_model(N=4), (1,))
    assert wd.fiber_dim == 0
    with pytest.raises(UnsupportedError):
        wandering_data(TwistedTuple([diag_op(LatticeSpec(1, 1, 4), 1, [[LAM]])]), ())


def test_unitary_equivalent_examples():
    T = random_model(3, [1], 3, 5, 21)
    wd = wandering_data(T, (1,))
    r = unitary_equivalent(wd, wd)
    assert r.exists and r.residual < 1e-10
    assert abs(abs(np.linalg.det(r.Q)) - 1) < 1e-10
    Q = random_unitary(3, 4)
    r = unitary_equivalent(wd, wd.conjugate(Q), seed=2)
    assert r.exists and r.residual < 1e-10
    a = wandering_data(model_tuple(LatticeSpec(1, 1, 4), [1], {(1, 2): [[1]]}, {2: [[LAM]]}, n=2), (1,))
    b = wandering_data(model_tuple(LatticeSpec(1, 1, 4), [1], {(1, 2): [[1]]}, {2: [[MU]]}, n=2), (1,))
    r = unitary_equivalent(a, b)
    assert r.verdict == "not-equivalent" and r.space_dim == 0


def test_budget_exhaustion_is_inconclusive():
    # rank-deficient intertwiners only: X = Y with a tiny budget of zero attempts
    X = [np.diag([1, 1, -1]).astype(complex)]
    from twisted_isometries.equiv import equivalence_of_matrices
    r = equivalence_of_matrices(X, X, budget=0)
    assert r.verdict == "inconclusive" and r.diagnostics["reason"] == "budget-exhausted"
    assert not r.exists


def test_equivalence_pipeline():
    T = random_model(2, [1, 2], 2, 5, 3)
    r = equivalence(T, T)
    assert r.verdict == "equivalent" and r.residual < 1e-9
    r = equivalence(T, T.conjugate_fiber(random_unitary(2, 9)))
    assert r.verdict == "equivalent" and r.residual < 1e-9
    r = equivalence(scalar_model(N=5, lam=LAM), scalar_model(N=5, lam=MU))
    assert r.verdict == "not-equivalent"
    assert r.perA[(1, 2)].space_dim == 0
    assert r.to_dict()["equivalent"] is False


def test_glue_identity_and_mixed():
    T = scalar_model(N=5)
    dec = decompose(T)
    perA = {A: IntertwinerResult("equivalent", np.eye(1), 0.0, 1) for A in [(1, 2)]}
    g = glue_global(T, T, perA, dec, dec)
    assert g.report.passed
    K = g.report.n_check
    low = basis_size(2, 1, K)
    assert np.allclose(g.Pi[:low, :low], np.eye(low))

    s = LatticeSpec(1, 2, 5)
    a = model_tuple(s, [1], {(1, 2): np.diag([LAM, 1])}, {2: np.diag([1j, -1])}, n=2)
    b = model_tuple(s, [2], {(1, 2): np.diag([MU, 1])}, {1: np.diag([OMEGA, 1])}, n=2)
    X = direct_sum(a, b)
    Y = X.conjugate_fiber([random_unitary(2, 1), random_unitary(2, 2)])
    r = equivalence(X, Y)
    assert r.verdict == "equivalent" and r.residual < 1e-9
    assert r.perA[(1,)].space_dim and r.perA[(2,)].space_dim


def test_glue_missing_summand():
    T = scalar_model(N=4)
    with pytest.raises(PreconditionError):
        glue_global(T, T, {})


def test_defect_operator():
    s = LatticeSpec(1, 1, 4)
    P = defect_operator(TwistedTuple([mult_op(s, 1)]), (1,))
    assert np.allclose(P, np.diag([1, 0, 0, 0, 0]))
    s2 = LatticeSpec(2, 2, 4)
    T = TwistedTuple([mult_op(s2, 1), mult_op(s2, 2)])
    P = defect_operator(T, (1, 2))
    want = np.zeros(s2.dim)
    want[:2] = 1
    assert np.allclose(P, np.diag(want))
    M = model_tuple(s2, [1, 2], {(1, 2): np.diag([LAM, MU])})
    assert np.allclose(defect_operator(M, (1, 2)), np.diag(want))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([(2, (1,)), (2, (1, 2)), (3, (1, 3)), (3, (2,))]),
       st.integers(1, 3))
def test_defect_is_rank_d_projection(seed, shape, d):
    n, A = shape
    T = random_model(n, A, d, 4, seed)
    P = defect_operator(T, A)
    assert op_norm(P @ P - P) < 1e-10 and op_norm(P - dag(P)) < 1e-10
    assert round(np.trace(P).real) == d


def test_reducing_from_fiber_examples():
    s = LatticeSpec(1, 2, 4)
    M = model_tuple(s, [1], {(1, 2): np.diag([LAM, 1])}, {2: np.diag([1j, -1])}, n=2)
    S = reducing_from_fiber(M, Subspace.full(2))
    assert S.dim == s.dim and S.meta["verified"]
    assert reducing_from_fiber(M, Subspace.zero(2)).dim == 0
    S = reducing_from_fiber(M, Subspace.span(np.array([[1], [0]], dtype=complex)))
    assert S.dim == s.dim // 2
    with pytest.raises(NotReducingError):
        reducing_from_fiber(M, Subspace.span(np.array([[1], [1]], dtype=complex)))


def test_irreducibility_examples():
    for n in (1, 2, 3):
        s = LatticeSpec(n, 1, 3)
        rep = irreducibility_report(TwistedTuple([mult_op(s, i) for i in range(1, n + 1)]))
        assert rep["verdict"] == "irreducible" and rep["criterion_met"]
    s = LatticeSpec(1, 1, 4)
    a = model_tuple(s, [1], {(1, 2): [[LAM]]}, {2: [[1j]]}, n=2)
    b = model_tuple(s, [2], {(1, 2): [[LAM]]}, {1: [[1j]]}, n=2)
    rep = irreducibility_report(direct_sum(a, b))
    assert rep["verdict"] == "reducible" and rep["witness"]["kind"] == "summand"
    M = model_tuple(LatticeSpec(2, 2, 4), [1, 2], {(1, 2): LAM * np.eye(2)})
    rep = irreducibility_report(M)
    assert not rep["criterion_met"] and rep["verdict"] == "reducible"
    assert rep["commutant_dim"] == 4 and rep["witness"]["verified"]
    # the criterion is sufficient, not necessary: a generic tail makes the algebra irreducible
    rep = irreducibility_report(example21(N=4))
    assert rep["wandering_dim"] == 2 and rep["fiber_dim"] == 2


def test_commutant_of_nothing():
    assert len(commutant([], 2)) == 4


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([(2, (1,)), (2, (1, 2)), (3, (2, 3))]))
def test_equivalence_forward_and_backward(seed, shape):
    n, A = shape
    X = random_model(n, A, 2, 5, seed)
    Y = X.conjugate_fiber(random_unitary(2, seed + 1))
    r = equivalence(X, Y, seed=seed)
    assert r.verdict == "equivalent"
    assert r.residual < 1e-9
    # forward: the glued unitary restricted to each wandering subspace is a witness
    decX, decY = decompose(X), decompose(Y)
    for B in subsets(n):
        if decX[B].wandering.dim == 0:
            continue
        Wx, *tx = restricted_data(X, decX[B].wandering, B)
        Wy, *ty = restricted_data(Y, decY[B].wandering, B)
        Q = dag(Wy) @ r.glue.Pi @ Wx
        pairs = [(tx[0][q], ty[0][q]) for q in tx[0]] + [(tx[1][p], ty[1][p]) for p in tx[1]]
        res = max(op_norm(Q @ a - b @ Q) for a, b in pairs)
        assert res < 1e-9
        assert op_norm(dag(Q) @ Q - np.eye(Q.shape[0])) < 1e-9
    # the twist relations are checked as residuals, never assumed
    assert any("U" in e.relation for e in r.glue.report.entries)


def test_intertwiner_space_tolerates_rounding_noise():
    # 1x1 data equal up to rounding: the stacked system is pure noise
    a = np.array([[np.exp(0.7j)]])
    b = a * (1 + 1e-16j)
    assert len(intertwiner_space([a, a], [b, a])) == 1
    r = unitary_equivalent(
        type(wandering_data(scalar_model(N=4), (1, 2)))((1,), 1, {2: a}, {(1, 2): a}),
        type(wandering_data(scalar_model(N=4), (1, 2)))((1,), 1, {2: b}, {(1, 2): a}))
    assert r.exists
