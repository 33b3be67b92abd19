import pytest

from twisted_isometries.errors import InvalidInputError, TruncationError
from twisted_isometries.lattice import LatticeSpec, enumerate_basis, lattice_points, slab


def test_enumerate_examples():
    b = enumerate_basis(LatticeSpec(1, 1, 2))
    assert [x.k for x in b] == [(0,), (1,), (2,)]
    b = enumerate_basis(LatticeSpec(2, 1, 1))
    assert [x.k for x in b] == [(0, 0), (0, 1), (1, 0)]
    assert len(enumerate_basis(LatticeSpec(2, 2, 3))) == 20


def test_slab_examples():
    s = LatticeSpec(1, 2, 1)
    assert list(slab(s, (0,))) == [0, 1]
    assert list(slab(s, (1,))) == [2, 3]
    s2 = LatticeSpec(2, 1, 2)
    pos = [i for i, x in enumerate(enumerate_basis(s2)) if x.k == (1, 1)]
    assert list(slab(s2, (1, 1))) == pos
    with pytest.raises(TruncationError):
        slab(s2, (2, 1))


@pytest.mark.parametrize("m,d,N", [(0, 2, 3), (1, 3, 4), (2, 2, 3), (3, 1, 3)])
def test_slabs_partition_basis(m, d, N):
    spec = LatticeSpec(m, d, N)
    seen = []
    for k in lattice_points(m, N):
        seen.extend(slab(spec, k))
    assert sorted(seen) == list(range(spec.dim))
    assert enumerate_basis(spec) == enumerate_basis(spec)


def test_graded_prefix():
    lo, hi = lattice_points(2, 3), lattice_points(2, 5)
    assert hi[:len(lo)] == lo


def test_invalid_spec():
    with pytest.raises(InvalidInputError):
        LatticeSpec(1, 0, 2)
    with pytest.raises(InvalidInputError):
        LatticeSpec(-1, 1, 2)
