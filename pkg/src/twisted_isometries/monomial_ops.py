"""Monomial operators on truncated vector-valued Hardy spaces.

A monomial operator acts on basis vectors by

    z^k ⊗ η  ↦  z^(k+s) ⊗ B · Π_t G_t^<c_t, k> η

with a fixed degree shift ``s``, a unitary front factor ``B`` and a family of
commuting unitary generators ``G_t`` raised to integer linear functionals of
``k``. Multiplication by a coordinate, the diagonal operators ``D_j[U]``,
constant fiber unitaries ``I ⊗ U`` and every model operator are of this form,
and the class is closed under composition when the generators commute.

Operators are realised as graded rectangular matrices from the truncation
``|k| <= N`` to ``|k| <= N + |s|``; on those sections an isometry stays an
exact isometry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from itertools import combinations

import numpy as np

from .errors import ClosureError, ConstructionError, InvalidInputError, InvariantViolation, TruncationError
from .lattice import LatticeSpec, basis_size, lattice_points, num_points, point_index
from .linalg import as_cmat, commutator_norm, dag, is_unitary, op_norm

# structural checks on operator data; looser than relation residuals on purpose
STRUCT_TOL = 1e-9


def _mpow(G, e: int, cache: dict, key) -> np.ndarray:
    hit = cache.get((key, e))
    if hit is None:
        base = G if e >= 0 else dag(G)
        hit = np.linalg.matrix_power(base, abs(e))
        cache[(key, e)] = hit
    return hit


@dataclass(frozen=True, eq=False)
class MonomialOp:
    spec: LatticeSpec
    shift: tuple
    B: np.ndarray
    gens: tuple = ()
    exps: tuple = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        m, d = self.spec.m, self.spec.d
        shift = tuple(int(x) for x in self.shift)
        if len(shift) != m or any(x < 0 for x in shift):
            raise InvalidInputError(f"shift {self.shift} is not in Z_+^{m}")
        B = as_cmat(self.B)
        if B.shape != (d, d):
            raise InvalidInputError(f"B must be {d}x{d}, got {B.shape}")
        gens = tuple(as_cmat(G) for G in self.gens)
        exps = tuple(tuple(int(x) for x in c) for c in self.exps)
        if len(gens) != len(exps):
            raise InvalidInputError("gens and exps differ in length")
        for G, c in zip(gens, exps):
            if G.shape != (d, d):
                raise InvalidInputError(f"generator must be {d}x{d}, got {G.shape}")
            if len(c) != m:
                raise InvalidInputError(f"exponent row {c} must have length {m}")
        if not is_unitary(B, _struct_tol())[0]:
            raise InvariantViolation("front factor B is not unitary")
        for G in gens:
            if not is_unitary(G, _struct_tol())[0]:
                raise InvariantViolation("twist generator is not unitary")
        for G, H in combinations(gens, 2):
            if commutator_norm(G, H) > STRUCT_TOL:
                raise InvariantViolation("twist generators do not commute")
        for G in gens:
            if commutator_norm(B, G) > STRUCT_TOL:
                raise InvariantViolation("B does not commute with a twist generator")
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "gens", gens)
        object.__setattr__(self, "exps", exps)

    @property
    def degree_shift(self) -> int:
        return sum(self.shift)

    def fiber(self, k) -> np.ndarray:
        """The d×d block sending slab ``k`` to slab ``k + s``."""
        k = tuple(k)
        hit = self._cache.get(("fiber", k))
        if hit is not None:
            return hit
        M = self.B
        for t, (G, c) in enumerate(zip(self.gens, self.exps)):
            e = sum(ci * ki for ci, ki in zip(c, k))
            if e:
                M = M @ _mpow(G, e, self._cache, t)
        self._cache[("fiber", k)] = M
        return M

    def target(self, k) -> tuple:
        return tuple(a + b for a, b in zip(k, self.shift))

    def source(self, k):
        """Preimage slab of ``k`` or None when ``k - s`` leaves Z_+^m."""
        src = tuple(a - b for a, b in zip(k, self.shift))
        if any(x < 0 for x in src):
            return None
        return src

    def apply(self, v, N: int | None = None) -> np.ndarray:
        N = self.spec.N if N is None else N
        m, d = self.spec.m, self.spec.d
        v = np.asarray(v, dtype=complex)
        if v.shape[0] != basis_size(m, d, N):
            raise InvalidInputError("vector length does not match the truncation")
        out = np.zeros((basis_size(m, d, N + self.degree_shift),) + v.shape[1:], dtype=complex)
        idx = point_index(m, N + self.degree_shift)
        for p, k in enumerate(lattice_points(m, N)):
            q = idx[self.target(k)]
            out[q * d:(q + 1) * d] = self.fiber(k) @ v[p * d:(p + 1) * d]
        return out

    def adjoint_apply(self, v, N: int | None = None) -> np.ndarray:
        N = self.spec.N if N is None else N
        m, d = self.spec.m, self.spec.d
        v = np.asarray(v, dtype=complex)
        if v.shape[0] != basis_size(m, d, N):
            raise InvalidInputError("vector length does not match the truncation")
        out = np.zeros_like(v)
        idx = point_index(m, N)
        for p, k in enumerate(lattice_points(m, N - self.degree_shift)):
            q = idx[self.target(k)]
            out[p * d:(p + 1) * d] = dag(self.fiber(k)) @ v[q * d:(q + 1) * d]
        return out

    def to_matrix(self, N_dom: int | None = None) -> np.ndarray:
        """Matrix from the truncation ``N_dom`` to ``N_dom + |s|``."""
        N_dom = self.spec.N if N_dom is None else N_dom
        if N_dom > self.spec.N:
            raise TruncationError(f"domain truncation {N_dom} exceeds spec N = {self.spec.N}")
        hit = self._cache.get(("mat", N_dom))
        if hit is not None:
            return hit
        m, d = self.spec.m, self.spec.d
        rows = basis_size(m, d, N_dom + self.degree_shift)
        M = np.zeros((rows, basis_size(m, d, N_dom)), dtype=complex)
        if N_dom >= 0:
            idx = point_index(m, N_dom + self.degree_shift)
            for p, k in enumerate(lattice_points(m, N_dom)):
                q = idx[self.target(k)]
                M[q * d:(q + 1) * d, p * d:(p + 1) * d] = self.fiber(k)
        M.setflags(write=False)
        self._cache[("mat", N_dom)] = M
        return M

    def compressed(self) -> np.ndarray:
        """Square section P_N V P_N on the truncation N = spec.N."""
        n = self.spec.dim
        return self.to_matrix(self.spec.N)[:n, :]

    def with_spec(self, spec: LatticeSpec) -> "MonomialOp":
        if (spec.m, spec.d) != (self.spec.m, self.spec.d):
            raise InvalidInputError("with_spec may only change the truncation")
        return MonomialOp(spec, self.shift, self.B, self.gens, self.exps)

    def conjugate(self, Q) -> "MonomialOp":
        """The operator (I ⊗ Q) V (I ⊗ Q)*."""
        Q = as_cmat(Q)
        return MonomialOp(self.spec, self.shift, Q @ self.B @ dag(Q),
                          tuple(Q @ G @ dag(Q) for G in self.gens), self.exps)

    def __repr__(self):
        return f"MonomialOp(shift={self.shift}, gens={len(self.gens)}, d={self.spec.d})"


def _struct_tol():
    from .linalg import TolerancePolicy
    return TolerancePolicy(residual=STRUCT_TOL)


@dataclass(frozen=True, eq=False)
class OpaqueOp:
    """Dense fallback for products that leave the monomial class.

    Only the stored section is known, so the Wold engine refuses these.
    """

    spec: LatticeSpec
    N_dom: int
    matrix: np.ndarray
    degree_shift: int

    def to_matrix(self, N_dom: int | None = None) -> np.ndarray:
        if N_dom not in (None, self.N_dom):
            raise TruncationError("opaque operator is only known on its stored section")
        return self.matrix


def mult_op(spec: LatticeSpec, i: int) -> MonomialOp:
    """Multiplication by the coordinate z_i (1-based)."""
    if not 1 <= i <= spec.m:
        raise InvalidInputError(f"coordinate index {i} out of range 1..{spec.m}")
    s = [0] * spec.m
    s[i - 1] = 1
    return MonomialOp(spec, tuple(s), np.eye(spec.d))


def diag_op(spec: LatticeSpec, j: int, U) -> MonomialOp:
    """The diagonal operator D_j[U]: z^k η ↦ z^k U^(k_j) η."""
    if not 1 <= j <= spec.m:
        raise InvalidInputError(f"coordinate index {j} out of range 1..{spec.m}")
    c = [0] * spec.m
    c[j - 1] = 1
    return MonomialOp(spec, (0,) * spec.m, np.eye(spec.d), (U,), (tuple(c),))


def const_op(spec: LatticeSpec, U) -> MonomialOp:
    """The constant fiber operator I ⊗ U."""
    return MonomialOp(spec, (0,) * spec.m, U)


def compose(op2: MonomialOp, op1: MonomialOp) -> MonomialOp:
    """The product op2 · op1, kept in monomial form."""
    if isinstance(op1, OpaqueOp) or isinstance(op2, OpaqueOp):
        raise ClosureError("opaque operators cannot be composed symbolically")
    if op1.spec != op2.spec:
        raise InvalidInputError("operators live on different lattices")
    gens = op1.gens + op2.gens
    for G, H in combinations(gens, 2):
        if commutator_norm(G, H) > STRUCT_TOL:
            raise ClosureError("merged generator family does not commute")
    for G in gens:
        if commutator_norm(G, op1.B) > STRUCT_TOL or commutator_norm(G, op2.B) > STRUCT_TOL:
            raise ClosureError("a generator fails to commute with a front factor")
    twist = np.eye(op1.spec.d, dtype=complex)
    for t, (G, c) in enumerate(zip(op2.gens, op2.exps)):
        e = sum(ci * si for ci, si in zip(c, op1.shift))
        if e:
            twist = twist @ np.linalg.matrix_power(G if e > 0 else dag(G), abs(e))
    B = op2.B @ twist @ op1.B
    shift = tuple(a + b for a, b in zip(op1.shift, op2.shift))
    return MonomialOp(op1.spec, shift, B, gens, op1.exps + op2.exps)


def compose_or_dense(op2, op1, N_dom: int):
    """``compose`` when possible, otherwise the dense product tagged opaque."""
    try:
        return compose(op2, op1)
    except ClosureError:
        M1 = op1.to_matrix(N_dom)
        M2 = op2.to_matrix(N_dom + op1.degree_shift)
        return OpaqueOp(op1.spec, N_dom, M2 @ M1, op1.degree_shift + op2.degree_shift)


def chain(*ops: MonomialOp) -> MonomialOp:
    """Left-to-right operator product ``ops[0] · ops[1] · ...``."""
    return reduce(lambda acc, op: compose(acc, op), ops)


# ---------------------------------------------------------------------------
# tuples


def _pair(i: int, j: int):
    return (i, j) if i < j else (j, i)


class TwistedTuple:
    """n monomial operators on a common lattice together with fiber twists U_ij.

    ``twists`` maps pairs ``(i, j)`` with ``i < j`` (1-based) to d×d matrices;
    missing pairs default to the identity and ``U_ji = U_ij*``. The twist acts
    on the whole space as ``I ⊗ U_ij``.
    """

    def __init__(self, ops, twists=None):
        ops = list(ops)
        if not ops:
            raise InvalidInputError("a tuple needs at least one operator")
        spec = ops[0].spec
        if any(op.spec != spec for op in ops):
            raise InvalidInputError("operators live on different lattices")
        self.ops = ops
        self.spec = spec
        self.n = len(ops)
        tw = {}
        for key, U in (twists or {}).items():
            i, j = key
            if not (1 <= i <= self.n and 1 <= j <= self.n) or i == j:
                raise InvalidInputError(f"bad twist index {key}")
            U = as_cmat(U)
            if U.shape != (spec.d, spec.d):
                raise InvalidInputError(f"twist {key} must be {spec.d}x{spec.d}")
            if i > j:
                i, j, U = j, i, dag(U)
            tw[(i, j)] = U
        self.twists = tw

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def blocks(self):
        return [self]

    @property
    def opaque(self) -> bool:
        return any(isinstance(op, OpaqueOp) for op in self.ops)

    def twist(self, i: int, j: int) -> np.ndarray:
        if i == j:
            raise InvalidInputError("U_ii is undefined")
        U = self.twists.get(_pair(i, j))
        if U is None:
            return np.eye(self.d, dtype=complex)
        return U if i < j else dag(U)

    def twist_power(self, i: int, j: int, e: int) -> np.ndarray:
        U = self.twist(i, j)
        return np.linalg.matrix_power(U if e >= 0 else dag(U), abs(e))

    @property
    def max_shift(self) -> int:
        return max(op.degree_shift for op in self.ops)

    def with_truncation(self, N: int) -> "TwistedTuple":
        spec = self.spec.with_N(N)
        return TwistedTuple([op.with_spec(spec) for op in self.ops], self.twists)

    def conjugate_fiber(self, Q) -> "TwistedTuple":
        Q = as_cmat(Q)
        return TwistedTuple([op.conjugate(Q) for op in self.ops],
                            {k: Q @ U @ dag(Q) for k, U in self.twists.items()})

    def __repr__(self):
        return f"TwistedTuple(n={self.n}, m={self.spec.m}, d={self.spec.d}, N={self.spec.N})"


class DirectSum:
    """Orthogonal direct sum of twisted tuples with the same number of operators."""

    def __init__(self, parts):
        flat = []
        for p in parts:
            flat.extend(p.blocks)
        if not flat:
            raise InvalidInputError("empty direct sum")
        if len({b.n for b in flat}) != 1:
            raise InvalidInputError("summands have different numbers of operators")
        self._blocks = flat
        self.n = flat[0].n

    @property
    def blocks(self):
        return list(self._blocks)

    @property
    def max_shift(self) -> int:
        return max(b.max_shift for b in self._blocks)

    @property
    def opaque(self) -> bool:
        return any(b.opaque for b in self._blocks)

    def with_truncation(self, N: int) -> "DirectSum":
        return DirectSum([b.with_truncation(N) for b in self._blocks])

    def conjugate_fiber(self, Qs) -> "DirectSum":
        return DirectSum([b.conjugate_fiber(Q) for b, Q in zip(self._blocks, Qs)])

    def __repr__(self):
        return f"DirectSum(n={self.n}, blocks={len(self._blocks)})"


def direct_sum(*parts) -> DirectSum:
    return DirectSum(parts)


def total_dim(T) -> int:
    return sum(b.spec.dim for b in T.blocks)


def block_offsets(T) -> list:
    offs, acc = [], 0
    for b in T.blocks:
        offs.append(acc)
        acc += b.spec.dim
    return offs


def _block_diag(mats) -> np.ndarray:
    r = sum(M.shape[0] for M in mats)
    c = sum(M.shape[1] for M in mats)
    out = np.zeros((r, c), dtype=complex)
    i = j = 0
    for M in mats:
        out[i:i + M.shape[0], j:j + M.shape[1]] = M
        i += M.shape[0]
        j += M.shape[1]
    return out


def fiber_kron(spec: LatticeSpec, N: int, U) -> np.ndarray:
    """I ⊗ U on the truncation N."""
    return np.kron(np.eye(num_points(spec.m, N)), U)


def op_matrix(T, i: int) -> np.ndarray:
    """Square section P V_i P on the full truncation (block diagonal over summands)."""
    mats = []
    for b in T.blocks:
        op = b.ops[i - 1]
        if isinstance(op, OpaqueOp):
            raise TruncationError("opaque operator has no square section")
        mats.append(op.compressed())
    return _block_diag(mats)


def twist_matrix(T, i: int, j: int, e: int = 1) -> np.ndarray:
    return _block_diag([fiber_kron(b.spec, b.spec.N, b.twist_power(i, j, e)) for b in T.blocks])


def conjugate_tuple(T, Q):
    """Fiber conjugation by Q (one matrix per summand for direct sums)."""
    if isinstance(T, DirectSum):
        Qs = Q if isinstance(Q, (list, tuple)) else [Q] * len(T.blocks)
        return T.conjugate_fiber(Qs)
    return T.conjugate_fiber(Q)


# ---------------------------------------------------------------------------
# model tuples


def _check_model_data(n, A, twists, tails, d):
    from .linalg import TolerancePolicy
    tol = TolerancePolicy(residual=STRUCT_TOL)
    U = {}
    for (i, j), M in twists.items():
        M = as_cmat(M)
        if M.shape != (d, d):
            raise ConstructionError(f"twist {(i, j)} must be {d}x{d}")
        if not is_unitary(M, tol)[0]:
            raise ConstructionError(f"twist {(i, j)} is not unitary")
        U[(i, j)] = M
        U[(j, i)] = dag(M)

    def tw(i, j):
        return U.get((i, j), np.eye(d, dtype=complex))

    mats = list(U.values())
    for X, Y in combinations(mats, 2):
        if commutator_norm(X, Y) > STRUCT_TOL:
            raise ConstructionError("twists do not commute pairwise")
    Ac = [q for q in range(1, n + 1) if q not in A]
    for q in Ac:
        if q not in tails:
            raise ConstructionError(f"missing tail unitary for index {q}")
        if not is_unitary(tails[q], tol)[0]:
            raise ConstructionError(f"tail {q} is not unitary")
        for X in mats:
            if commutator_norm(tails[q], X) > STRUCT_TOL:
                raise ConstructionError(f"tail {q} does not commute with the twists")
    for i, j in combinations(Ac, 2):
        lhs = tails[i] @ tails[j]
        rhs = tw(i, j) @ tails[j] @ tails[i]
        if op_norm(lhs - rhs) > STRUCT_TOL:
            raise ConstructionError(f"tails {i},{j} violate U_i U_j = U_ij U_j U_i")
    return tw


def model_tuple(spec: LatticeSpec, A, twists=None, tails=None, n: int | None = None) -> TwistedTuple:
    """The analytic model tuple for the subset ``A`` on H^2_E(D^|A|).

    For ``A = {p_1 < ... < p_m}`` and ``A^c = {q_1 < ...}``:

    * ``V_{p_1} = M_{z_1}``;
    * ``V_{p_i} = M_{z_i} D_1[U_{p_i p_1}] ... D_{i-1}[U_{p_i p_{i-1}}]``;
    * ``V_{q_j} = D_1[U_{q_j p_1}] ... D_m[U_{q_j p_m}] (I ⊗ U_{q_j})``.

    ``twists`` is keyed by 1-based pairs ``(i, j)``, ``tails`` by the indices
    of ``A^c``.
    """
    A = sorted(int(a) for a in A)
    twists = {tuple(k): v for k, v in (twists or {}).items()}
    tails = {int(k): as_cmat(v) for k, v in (tails or {}).items()}
    if n is None:
        keys = set(A) | set(tails) | {i for k in twists for i in k}
        n = max(keys) if keys else 1
    if len(A) != spec.m:
        raise ConstructionError(f"|A| = {len(A)} but lattice rank is {spec.m}")
    if len(set(A)) != len(A) or any(not 1 <= a <= n for a in A):
        raise ConstructionError(f"A = {A} is not a subset of 1..{n}")
    tw = _check_model_data(n, A, twists, tails, spec.d)
    d, m = spec.d, spec.m
    ops = [None] * n
    for i, p in enumerate(A):
        s = [0] * m
        s[i] = 1
        gens, exps = [], []
        for r in range(i):
            c = [0] * m
            c[r] = 1
            gens.append(tw(p, A[r]))
            exps.append(tuple(c))
        ops[p - 1] = MonomialOp(spec, tuple(s), np.eye(d), tuple(gens), tuple(exps))
    for q in range(1, n + 1):
        if q in A:
            continue
        gens, exps = [], []
        for r in range(m):
            c = [0] * m
            c[r] = 1
            gens.append(tw(q, A[r]))
            exps.append(tuple(c))
        ops[q - 1] = MonomialOp(spec, (0,) * m, tails[q], tuple(gens), tuple(exps))
    pair_tw = {(i, j): tw(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)}
    return TwistedTuple(ops, pair_tw)


# ---------------------------------------------------------------------------
# exact graded evaluation of operator words
#
# A word is a sequence of letters, leftmost factor first:
#   ("v", i)        V_i
#   ("a", i)        V_i*
#   ("u", i, j, e)  (I ⊗ U_ij)^e


def _block_word(block: TwistedTuple, word, n_check: int):
    spec = block.spec
    level = n_check
    M = np.eye(basis_size(spec.m, spec.d, n_check), dtype=complex)
    for letter in reversed(word):
        kind = letter[0]
        if kind == "v":
            op = block.ops[letter[1] - 1]
            if level > spec.N:
                raise TruncationError(f"word needs truncation {level} > N = {spec.N}")
            M = op.to_matrix(level) @ M
            level += op.degree_shift
        elif kind == "a":
            op = block.ops[letter[1] - 1]
            level -= op.degree_shift
            if level > spec.N:
                raise TruncationError(f"word needs truncation {level} > N = {spec.N}")
            M = dag(op.to_matrix(level)) @ M
        elif kind == "u":
            U = block.twist_power(letter[1], letter[2], letter[3])
            M = fiber_kron(spec, level, U) @ M
        else:
            raise InvalidInputError(f"unknown letter {letter!r}")
    return M, level


def word_blocks(T, word, n_check: int):
    """Per-summand graded matrices ``[(M_b, out_level_b), ...]`` of a word."""
    return [_block_word(b, word, n_check) for b in T.blocks]


def _pad_rows(M, spec: LatticeSpec, level: int, target: int) -> np.ndarray:
    rows = basis_size(spec.m, spec.d, target)
    if M.shape[0] == rows:
        return M
    out = np.zeros((rows, M.shape[1]), dtype=complex)
    out[:M.shape[0]] = M
    return out


def poly_blocks(T, terms, n_check: int):
    """Evaluate a linear combination ``[(coef, word), ...]`` summand by summand.

    Results of different words are embedded into the largest codomain
    truncation by zero padding, which is exact for graded operators.
    """
    per = [word_blocks(T, w, n_check) for _, w in terms]
    out = []
    for bi, block in enumerate(T.blocks):
        top = max(max(p[bi][1] for p in per), -1)
        acc = np.zeros((basis_size(block.spec.m, block.spec.d, top),
                        basis_size(block.spec.m, block.spec.d, n_check)), dtype=complex)
        for (c, _), p in zip(terms, per):
            M, lev = p[bi]
            acc = acc + c * _pad_rows(M, block.spec, lev, top)
        out.append((acc, top))
    return out


def compare_polys(T, lhs, rhs, n_check: int):
    """Residual ``||lhs - rhs||`` (spectral norm) with the worst entry location.

    Returns ``(residual, where)`` where ``where`` is ``(block, row, col)`` of the
    largest entry of the difference, or None when the difference is empty.
    """
    diff = poly_blocks(T, list(lhs) + [(-c, w) for c, w in rhs], n_check)
    res, where, worst = 0.0, None, -1.0
    for bi, (D, _) in enumerate(diff):
        if D.size == 0:
            continue
        res = max(res, op_norm(D))
        r, c = np.unravel_index(np.argmax(np.abs(D)), D.shape)
        if abs(D[r, c]) > worst:
            worst = abs(D[r, c])
            where = (bi, int(r), int(c))
    return res, where


def word_reach(T, word) -> int:
    """Smallest headroom h such that the word evaluates on truncation N - h."""
    need = 0
    for block in T.blocks:
        level, top = 0, 0
        for letter in reversed(word):
            if letter[0] == "v":
                top = max(top, level)
                level += block.ops[letter[1] - 1].degree_shift
            elif letter[0] == "a":
                level -= block.ops[letter[1] - 1].degree_shift
                top = max(top, level)
        need = max(need, top)
    return need


def max_check_level(T, words) -> int:
    """Largest domain truncation on which every word can be evaluated exactly."""
    return min(b.spec.N for b in T.blocks) - max(word_reach(T, w) for w in words)
