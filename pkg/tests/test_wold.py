import numpy as np
import pytest

from conftest import LAM, OMEGA, example21, scalar_model
from twisted_isometries.errors import InconsistencyError, NotReducingError, UnsupportedError
from twisted_isometries.lattice import LatticeSpec, basis_size
from twisted_isometries.linalg import Subspace, intersect, kernel, random_unitary
from twisted_isometries.monomial_ops import (TwistedTuple, const_op, diag_op, direct_sum, model_tuple,
                                             mult_op, op_matrix)
from twisted_isometries.wold import (SlabField, a_wandering, build_model, containment_check, decompose,
                                     roundtrip_check, structure_checks, subsets, wandering_subspace,
                                     wold_single)
from twisted_isometries.scenario import random_model


def dense_W(T, A):
    """Joint kernel of the adjoints, from dense square sections."""
    n = sum(b.spec.dim for b in T.blocks)
    if not A:
        return Subspace.full(n)
    return kernel(np.vstack([op_matrix(T, i).conj().T for i in A]))


def dense_D(T, A, N):
    """Intersection of V^l W_A over l with |l| <= N, keeping only exact images."""
    n = sum(b.spec.dim for b in T.blocks)
    W = dense_W(T, A)
    Ac = [j for j in range(1, T.n + 1) if j not in A]
    spaces = [W]
    m = T.blocks[0].spec.m
    for j in Ac:
        V = op_matrix(T, j)
        for e in range(1, N + 1):
            low = np.zeros(n)
            low[:basis_size(m, T.blocks[0].d, N - e)] = 1
            Wl = intersect([W, Subspace.span(np.diag(low).astype(complex))])
            spaces.append(Subspace.span(np.linalg.matrix_power(V, e) @ Wl.frame, n))
    return intersect(spaces)


def low(T, L):
    mask = np.concatenate([np.arange(b.spec.dim) < basis_size(b.spec.m, b.d, L) for b in T.blocks])
    return Subspace.span(np.eye(len(mask), dtype=complex)[:, mask])


def test_wandering_examples():
    s = LatticeSpec(2, 1, 5)
    T = TwistedTuple([mult_op(s, 1), mult_op(s, 2)])
    assert wandering_subspace(T, ()).dim == s.dim
    W = wandering_subspace(T, (1, 2))
    assert W.table() == {"0,0": 1}
    E = example21(N=5)
    assert wandering_subspace(E, (1, 2)).dim == 2  # constants of both blocks
    assert wandering_subspace(E.blocks[0], (1, 2)).table() == {"0,0": 1}


@pytest.mark.parametrize("A", [(), (1,), (2,), (1, 2)])
def test_wandering_matches_dense_oracle(A):
    T = scalar_model(N=4)
    w, v = np.linalg.eigh(wandering_subspace(T, A).projector())
    assert Subspace(v[:, w > 0.5]).equals(dense_W(T, A))


def test_a_wandering_examples():
    s = LatticeSpec(1, 1, 5)
    T = model_tuple(s, [1], {(1, 2): [[LAM]]}, {2: [[OMEGA]]}, n=2)
    D = a_wandering(T, (1,))
    assert D.equals(wandering_subspace(T, (1,)))
    assert D.meta["iterations"] == 1 and not D.meta["truncation_limited"]
    s2 = LatticeSpec(2, 1, 5)
    T2 = TwistedTuple([mult_op(s2, 1), mult_op(s2, 2)])
    assert a_wandering(T2, (1,)).dim == 0
    # below the top degree the dense intersection is empty too
    assert intersect([dense_D(T2, (1,), 5), low(T2, 4)]).dim == 0
    assert a_wandering(T2, (1, 2)).equals(wandering_subspace(T2, (1, 2)))


def test_a_wandering_matches_dense_oracle():
    T = model_tuple(LatticeSpec(1, 2, 5), [2], {(1, 2): np.diag([LAM, 1])}, {1: np.diag([1j, -1])}, n=2)
    for A in subsets(2):
        D = a_wandering(T, A)
        w, v = np.linalg.eigh(D.projector())
        mine = intersect([Subspace(v[:, w > 0.5]), low(T, 4)])
        assert mine.equals(intersect([dense_D(T, A, 5), low(T, 4)]))


def test_truncation_limited_unitary_part():
    s = LatticeSpec(1, 1, 4)
    T = TwistedTuple([diag_op(s, 1, [[LAM]])])
    dec = decompose(T)
    assert dec[()].summand.dim == s.dim
    assert dec.truncation_limited == [()]
    with pytest.raises(UnsupportedError):
        build_model(T, (), dec)


def test_decompose_shift():
    T = TwistedTuple([mult_op(LatticeSpec(1, 1, 5), 1)])
    dec = decompose(T)
    assert dec[(1,)].summand.dim == 6 and dec[()].summand.dim == 0


def test_model_purity():
    T = random_model(3, [1, 3], 2, 5, 4)
    dec = decompose(T)
    assert dec.nonzero() == [(1, 3)]
    assert dec[(1, 3)].fiber_dim == 2
    assert dec[(1, 3)].labels == {1: "shift", 2: "unitary", 3: "shift"}


def test_direct_sum_split():
    # block 1: shift in V1, unitary in V2; block 2 swaps the roles
    s = LatticeSpec(1, 2, 4)
    U = np.diag([1j, -1])
    b1 = TwistedTuple([mult_op(s, 1), const_op(s, U)])
    b2 = TwistedTuple([const_op(s, U), mult_op(s, 1)])
    T = direct_sum(b1, b2)
    dec = decompose(T)
    assert dec.nonzero() == [(1,), (2,)]
    assert dec[(1,)].summand.dims() == {**{(0, k): 2 for k in s.points()}, **{(1, k): 0 for k in s.points()}}
    assert dec[(2,)].fiber_dim == 2
    assert roundtrip_check(T, dec).passed


def test_wold_single():
    s = LatticeSpec(1, 2, 4)
    sp, up = wold_single(mult_op(s, 1))
    assert sp.dim == s.dim and up.dim == 0
    sp, up = wold_single(const_op(s, random_unitary(2, 1)))
    assert sp.dim == 0 and up.dim == s.dim


def test_containment():
    E = example21(N=4)
    dec = decompose(E)
    H = dec[(1, 2)].summand
    assert containment_check(E, H, (1, 2), dec)
    assert containment_check(E, SlabField.zero(E), (1,), dec)
    s = LatticeSpec(1, 1, 4)
    T = direct_sum(TwistedTuple([mult_op(s, 1), const_op(s, [[1j]])]),
                   TwistedTuple([const_op(s, [[1j]]), mult_op(s, 1)]))
    dec = decompose(T)
    assert not containment_check(T, dec[(2,)].summand, (1,), dec)
    bad = SlabField.build(T, lambda bi, k: Subspace.full(1) if k == (0,) else Subspace.zero(1))
    with pytest.raises(NotReducingError):
        containment_check(T, bad, (1,), dec)


def test_uniqueness_redecomposition():
    s = LatticeSpec(1, 1, 4)
    T = direct_sum(TwistedTuple([mult_op(s, 1), const_op(s, [[1j]])]),
                   TwistedTuple([const_op(s, [[1j]]), mult_op(s, 1)]))
    dec = decompose(T)
    for A in dec.nonzero():
        H = dec[A].summand
        sub = decompose(T, within=H)
        assert sub[A].summand.equals(H)
        assert all(sub[B].summand.dim == 0 for B in subsets(2) if B != A)


def test_build_model_examples():
    T = scalar_model(N=5)
    md = build_model(T, (1, 2))
    assert md.fiber_dim == 1 and np.allclose(md.twists[(1, 2)], [[LAM]])
    s = LatticeSpec(1, 3, 5)
    md = build_model(TwistedTuple([mult_op(s, 1)]), (1,))
    assert md.fiber_dim == 3 and md.model.n == 1
    E = example21(N=4)
    md = build_model(E, (1, 2))
    assert md.fiber_dim == 2
    assert np.allclose(np.sort_complex(np.linalg.eigvals(md.twists[(1, 2)])),
                       np.sort_complex(np.array([np.conj(LAM), LAM])))
    assert build_model(T, (1,)).empty


def test_roundtrips():
    assert roundtrip_check(scalar_model(N=5)).max_residual < 1e-10
    T = random_model(3, [2], 3, 5, 12).conjugate_fiber(random_unitary(3, 5))
    assert roundtrip_check(T).max_residual < 1e-9
    s = LatticeSpec(1, 1, 5)
    a = model_tuple(s, [1], {(1, 2): [[LAM]]}, {2: [[OMEGA]]}, n=2)
    b = model_tuple(s, [2], {(1, 2): [[LAM]]}, {1: [[1j]]}, n=2)
    r = roundtrip_check(direct_sum(a, b))
    assert r.passed and r.max_residual < 1e-9


def test_structure_facts():
    for T in (scalar_model(N=5), example21(N=4), random_model(3, [1], 2, 4, 3).conjugate_fiber(random_unitary(2, 2))):
        assert structure_checks(T).passed


def test_inconsistent_input_detected():
    # a slab field that is not reducing leaves slab 1 uncovered
    s = LatticeSpec(1, 1, 4)
    T = TwistedTuple([mult_op(s, 1)])
    bad = SlabField.build(T, lambda bi, k: Subspace.full(1) if k == (0,) else Subspace.zero(1))
    with pytest.raises(InconsistencyError):
        decompose(T, within=bad)
    dec = decompose(T, within=bad, validate=False)
    assert not dec.certificate["complete"]
