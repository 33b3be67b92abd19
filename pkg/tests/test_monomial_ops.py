import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import LAM, OMEGA
from twisted_isometries.errors import ClosureError, ConstructionError, InvariantViolation, TruncationError
from twisted_isometries.lattice import LatticeSpec, basis_size, lattice_points
from twisted_isometries.linalg import is_isometry, is_unitary, random_commuting_unitaries, random_unitary
from twisted_isometries.monomial_ops import (MonomialOp, OpaqueOp, compose, compose_or_dense, const_op, diag_op,
                                             fiber_kron, model_tuple, mult_op)
from twisted_isometries.relations import verify_twisted

S1 = LatticeSpec(1, 1, 4)


def test_diag_action_on_monomials():
    D = diag_op(S1, 1, [[LAM]])
    v = D.apply(np.eye(5))
    assert np.allclose(v, np.diag(LAM ** np.arange(5)))


def test_shift_on_constant():
    out = mult_op(S1, 1).apply(np.array([1, 0, 0, 0, 0]))
    assert np.allclose(out, [0, 1, 0, 0, 0, 0])


def test_compose_applied_to_z2():
    op = compose(mult_op(S1, 1), diag_op(S1, 1, [[LAM]]))
    z2 = np.zeros(5)
    z2[2] = 1
    out = op.apply(z2)
    want = np.zeros(6, dtype=complex)
    want[3] = LAM ** 2
    assert np.allclose(out, want)


def test_adjoint_examples():
    Mz = mult_op(S1, 1)
    assert np.allclose(Mz.adjoint_apply(np.array([1, 0, 0, 0, 0])), 0)
    for q in range(1, 5):
        e = np.zeros(5)
        e[q] = 1
        want = np.zeros(5)
        want[q - 1] = 1
        assert np.allclose(Mz.adjoint_apply(e), want)
    D = diag_op(S1, 1, [[LAM]])
    Dbar = diag_op(S1, 1, [[np.conj(LAM)]])
    assert np.allclose(D.to_matrix(4).conj().T, Dbar.to_matrix(4))


def test_to_matrix_examples():
    M = mult_op(LatticeSpec(1, 1, 1), 1).to_matrix(1)
    assert np.array_equal(M, np.array([[0, 0], [1, 0], [0, 1]]))
    U = random_unitary(2, 3)
    assert np.allclose(const_op(LatticeSpec(1, 2, 0), U).to_matrix(0), U)
    D = diag_op(LatticeSpec(1, 1, 2), 1, [[1j]]).to_matrix(2)
    assert np.allclose(D, np.diag([1, 1j, -1]))
    with pytest.raises(TruncationError):
        mult_op(S1, 1).to_matrix(5)


def test_compose_examples():
    U, W = random_commuting_unitaries(2, 2, 9)
    s = LatticeSpec(1, 2, 3)
    c = compose(const_op(s, U), const_op(s, W))
    assert np.allclose(c.to_matrix(3), const_op(s, U @ W).to_matrix(3))
    a = compose(mult_op(S1, 1), diag_op(S1, 1, [[LAM]]))
    b = compose(diag_op(S1, 1, [[LAM]]), mult_op(S1, 1))
    assert np.allclose(b.B, LAM * a.B)
    s2 = LatticeSpec(2, 1, 3)
    assert np.allclose(compose(mult_op(s2, 1), mult_op(s2, 2)).to_matrix(3),
                       compose(mult_op(s2, 2), mult_op(s2, 1)).to_matrix(3))


def test_compose_closure_failure_and_dense_fallback():
    s = LatticeSpec(1, 2, 3)
    X = np.array([[0, 1], [1, 0]])
    Z = np.diag([1, -1])
    a, b = diag_op(s, 1, X), diag_op(s, 1, Z)
    with pytest.raises(ClosureError):
        compose(a, b)
    dense = compose_or_dense(a, b, 2)
    assert isinstance(dense, OpaqueOp)
    assert np.allclose(dense.matrix, a.to_matrix(2) @ b.to_matrix(2))


def test_constructors_reject_nonunitary():
    with pytest.raises(InvariantViolation):
        diag_op(S1, 1, [[2.0]])
    with pytest.raises(InvariantViolation):
        const_op(S1, [[0.5]])
    assert np.allclose(diag_op(S1, 1, [[1.0]]).to_matrix(4), np.eye(5))


def test_mult_op_isometric_every_truncation():
    s = LatticeSpec(2, 2, 5)
    for N in range(6):
        assert is_isometry(mult_op(s, 2).to_matrix(N))[0]


def test_shift_diag_commutation_identities():
    s = LatticeSpec(2, 2, 5)
    U = random_unitary(2, 8)
    Mz1, Mz2 = mult_op(s, 1), mult_op(s, 2)
    D1, D2 = diag_op(s, 1, U), diag_op(s, 2, U)
    for N in range(5):
        # D_j[U]* = D_j[U*]
        assert np.allclose(D1.to_matrix(N).conj().T, diag_op(s, 1, U.conj().T).to_matrix(N))
        # M_zi D_j = D_j M_zi for i != j
        assert np.allclose(D2.to_matrix(N + 1) @ Mz1.to_matrix(N), Mz1.to_matrix(N) @ D2.to_matrix(N))
        # M_zi* D_i[U] = (I ⊗ U) D_i[U] M_zi* from level N+1 down to N
        lhs = Mz1.to_matrix(N).conj().T @ D1.to_matrix(N + 1)
        rhs = fiber_kron(s, N, U) @ D1.to_matrix(N) @ Mz1.to_matrix(N).conj().T
        assert np.allclose(lhs, rhs)


def test_model_tuple_examples():
    T = model_tuple(LatticeSpec(1, 1, 4), [1])
    assert T.n == 1 and np.allclose(T.ops[0].to_matrix(3), mult_op(LatticeSpec(1, 1, 4), 1).to_matrix(3))
    s = LatticeSpec(2, 1, 5)
    T = model_tuple(s, [1, 2], {(1, 2): [[LAM]]})
    # the second operator is M_z2 D_1[U_21] with U_21 = conj(lam)
    want = compose(mult_op(s, 2), diag_op(s, 1, [[np.conj(LAM)]]))
    assert np.allclose(T.ops[1].to_matrix(4), want.to_matrix(4))
    assert verify_twisted(T).passed
    T = model_tuple(LatticeSpec(1, 1, 5), [1], {(1, 2): [[LAM]]}, {2: [[OMEGA]]}, n=2)
    V2 = T.ops[1]
    for k in lattice_points(1, 5):
        assert is_unitary(V2.fiber(k))[0]
    assert verify_twisted(T).passed


def test_model_tuple_hypothesis_failures():
    s = LatticeSpec(1, 2, 3)
    X = np.array([[0, 1], [1, 0]])
    with pytest.raises(ConstructionError):
        model_tuple(s, [1], {(1, 2): np.diag([1, -1])}, {2: X}, n=2)
    with pytest.raises(ConstructionError):
        model_tuple(s, [1], {}, {}, n=2)
    with pytest.raises(ConstructionError):
        model_tuple(LatticeSpec(2, 2, 3), [1], {}, {2: np.eye(2)}, n=2)


def test_unitary_fiber_operator_unitary_on_slabs():
    s = LatticeSpec(2, 2, 4)
    U, G = random_commuting_unitaries(2, 2, 3)
    op = MonomialOp(s, (0, 0), U, (G,), ((1, 2),))
    for N in range(5):
        assert is_unitary(op.to_matrix(N))[0]


seeds = st.integers(0, 2**31 - 1)


def _random_op(rng, s, Gs, B):
    shift = tuple(int(x) for x in rng.integers(0, 2, s.m))
    exps = tuple(tuple(int(x) for x in rng.integers(-2, 3, s.m)) for _ in Gs)
    return MonomialOp(s, shift, B, tuple(Gs), exps)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3))
def test_compose_is_exact(seed, d):
    rng = np.random.default_rng(seed)
    s = LatticeSpec(2, d, 5)
    fam = random_commuting_unitaries(d, 4, seed)
    a = _random_op(rng, s, fam[:2], fam[2])
    b = _random_op(rng, s, fam[1:3], fam[3])
    c = compose(b, a)
    N = 2
    lhs = c.to_matrix(N)
    rhs = b.to_matrix(N + a.degree_shift) @ a.to_matrix(N)
    assert np.linalg.norm(lhs - rhs, 2) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3))
def test_adjoint_consistency(seed, d):
    rng = np.random.default_rng(seed)
    s = LatticeSpec(2, d, 4)
    fam = random_commuting_unitaries(d, 3, seed)
    op = _random_op(rng, s, fam[:2], fam[2])
    N = s.N - op.degree_shift
    n_dom = basis_size(2, d, N)
    n_all = basis_size(2, d, s.N)
    x = rng.standard_normal(n_dom) + 1j * rng.standard_normal(n_dom)
    y = rng.standard_normal(n_all) + 1j * rng.standard_normal(n_all)
    lhs = np.vdot(y, op.apply(x, N))
    xa = op.adjoint_apply(y)[:n_dom]
    assert abs(lhs - np.vdot(xa, x)) < 1e-10
