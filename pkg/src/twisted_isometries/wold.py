"""Orthogonal decomposition of a twisted isometry into 2^n Wold summands.

Monomial operators map the fiber slab at lattice index ``k`` into the slab at
``k + s``, so every subspace in the decomposition splits slab by slab and the
fixpoint iterations only ever look at lower slabs. Within the truncation the
computed slabs are therefore exact, not approximations of an infinite
intersection.

Slabs are keyed by ``(block, k)`` where ``block`` indexes the summands of a
``DirectSum`` (always 0 for a plain tuple).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import (InconsistencyError, InvalidInputError, NotReducingError, TruncationError,
                     UnsupportedError)
from .lattice import LatticeSpec, basis_size, degree, lattice_points, point_index, slab
from .linalg import (DEFAULT_TOL, Subspace, TolerancePolicy, dag, image, intersect, kernel, op_norm,
                     subspace_sum)
from .monomial_ops import (MonomialOp, TwistedTuple, block_offsets, fiber_kron, model_tuple,
                           total_dim)
from .relations import RelationReport


def subsets(n: int):
    """All subsets of 1..n, by size and then lexicographically."""
    out = []
    for r in range(n + 1):
        out.extend(combinations(range(1, n + 1), r))
    return out


def _norm_subset(A, n: int) -> tuple:
    A = tuple(sorted(int(a) for a in A))
    if len(set(A)) != len(A) or any(not 1 <= a <= n for a in A):
        raise InvalidInputError(f"{A} is not a subset of 1..{n}")
    return A


def _require_monomial(T):
    for b in T.blocks:
        for op in b.ops:
            if not isinstance(op, MonomialOp):
                raise UnsupportedError("the Wold engine needs monomial operators, got an opaque one")


class SlabField:
    """A subspace of every fiber slab ``(block, k)`` of a tuple's space."""

    def __init__(self, specs, spaces: dict, meta: dict | None = None):
        self.specs = list(specs)
        self.spaces = dict(spaces)
        self.meta = dict(meta or {})

    @classmethod
    def build(cls, T, fn, meta=None) -> "SlabField":
        specs = [b.spec for b in T.blocks]
        spaces = {}
        for bi, spec in enumerate(specs):
            for k in lattice_points(spec.m, spec.N):
                spaces[(bi, k)] = fn(bi, k)
        return cls(specs, spaces, meta)

    @classmethod
    def full(cls, T) -> "SlabField":
        return cls.build(T, lambda bi, k: Subspace.full(T.blocks[bi].d))

    @classmethod
    def zero(cls, T) -> "SlabField":
        return cls.build(T, lambda bi, k: Subspace.zero(T.blocks[bi].d))

    @classmethod
    def constant(cls, T, D: Subspace) -> "SlabField":
        """The same fiber subspace in every slab of a single-block tuple."""
        if len(T.blocks) != 1:
            raise InvalidInputError("constant slab fields need a single-block tuple")
        return cls.build(T, lambda bi, k: D)

    def keys(self):
        return list(self.spaces)

    def __getitem__(self, key) -> Subspace:
        return self.spaces[key]

    def get(self, bi: int, k) -> Subspace:
        """Slab subspace, or zero when ``k`` lies outside the lattice."""
        key = (bi, tuple(k))
        if key in self.spaces:
            return self.spaces[key]
        return Subspace.zero(self.specs[bi].d)

    def dims(self) -> dict:
        return {key: S.dim for key, S in self.spaces.items()}

    @property
    def dim(self) -> int:
        return sum(S.dim for S in self.spaces.values())

    def nonzero(self) -> list:
        return [key for key, S in self.spaces.items() if S.dim]

    def max_degree(self, bi: int | None = None) -> int:
        degs = [degree(k) for (b, k) in self.nonzero() if bi is None or b == bi]
        return max(degs, default=-1)

    def basis(self) -> list:
        """``[(key, frame), ...]`` over non-zero slabs in slab order."""
        return [(key, S.frame) for key, S in self.spaces.items() if S.dim]

    def projector(self) -> np.ndarray:
        """Projector onto the field as a matrix on the whole truncated space."""
        n = sum(spec.dim for spec in self.specs)
        P = np.zeros((n, n), dtype=complex)
        offs = _offsets(self.specs)
        for (bi, k), S in self.spaces.items():
            if S.dim:
                r = slab(self.specs[bi], k)
                o = offs[bi]
                P[o + r.start:o + r.stop, o + r.start:o + r.stop] = S.projector
        return P

    def intersect(self, other: "SlabField", tol: TolerancePolicy = DEFAULT_TOL) -> "SlabField":
        return SlabField(self.specs, {key: intersect([S, other.spaces[key]], tol)
                                      for key, S in self.spaces.items()})

    def contains(self, other: "SlabField", tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        return all(S.contains(other.spaces[key], tol) for key, S in self.spaces.items())

    def equals(self, other: "SlabField", tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        return all(S.equals(other.spaces[key], tol) for key, S in self.spaces.items())

    def table(self) -> dict:
        """Non-zero slab dimensions keyed by readable slab labels."""
        multi = len(self.specs) > 1
        out = {}
        for (bi, k), S in self.spaces.items():
            if S.dim:
                lab = ",".join(str(x) for x in k) or "()"
                out[f"{bi}:{lab}" if multi else lab] = S.dim
        return out

    def __repr__(self):
        return f"SlabField(dim={self.dim}, slabs={len(self.spaces)})"


def _offsets(specs):
    offs, acc = [], 0
    for s in specs:
        offs.append(acc)
        acc += s.dim
    return offs


# ---------------------------------------------------------------------------
# slab-local operator actions


def _source(op: MonomialOp, k):
    return op.source(k)


def push(T, i: int, F: SlabField, tol: TolerancePolicy = DEFAULT_TOL) -> SlabField:
    """Slab-wise image ``V_i F`` within the truncation."""
    def fn(bi, k):
        op = T.blocks[bi].ops[i - 1]
        src = op.source(k)
        if src is None:
            return Subspace.zero(op.spec.d)
        return image(op.fiber(src), F.spaces[(bi, src)], tol)
    return SlabField.build(T, fn)


def pull(T, i: int, F: SlabField, tol: TolerancePolicy = DEFAULT_TOL) -> SlabField:
    """Slab-wise image ``V_i* F``, dropping what leaves the truncation."""
    def fn(bi, k):
        op = T.blocks[bi].ops[i - 1]
        tgt = op.target(k)
        if degree(tgt) > op.spec.N:
            return Subspace.zero(op.spec.d)
        return image(dag(op.fiber(k)), F.spaces[(bi, tgt)], tol)
    return SlabField.build(T, fn)


def twist_image(T, s: int, t: int, F: SlabField, tol: TolerancePolicy = DEFAULT_TOL) -> SlabField:
    return SlabField.build(T, lambda bi, k: image(T.blocks[bi].twist(s, t), F.spaces[(bi, k)], tol))


def _adjoint_kernel(T, i: int, bi: int, k, tol) -> Subspace:
    op = T.blocks[bi].ops[i - 1]
    src = op.source(k)
    if src is None:
        return Subspace.full(op.spec.d)
    return kernel(dag(op.fiber(src)), tol)


# ---------------------------------------------------------------------------
# wandering subspaces


def wandering_subspace(T, A, within: SlabField | None = None,
                       tol: TolerancePolicy = DEFAULT_TOL) -> SlabField:
    """Joint kernel of ``V_i*`` over ``i`` in ``A`` (the whole space for empty ``A``)."""
    _require_monomial(T)
    A = _norm_subset(A, T.n)

    def fn(bi, k):
        spaces = [_adjoint_kernel(T, i, bi, k, tol) for i in A]
        if within is not None:
            spaces.append(within.spaces[(bi, k)])
        if not spaces:
            return Subspace.full(T.blocks[bi].d)
        return intersect(spaces, tol)
    return SlabField.build(T, fn)


def _fixpoint_cap(T) -> int:
    return max(b.d * (b.spec.N + 1) ** b.spec.m for b in T.blocks) + 1


def _is_finite(T, F: SlabField) -> bool:
    """True when no non-zero slab reaches the top shell of the truncation.

    Supports of the fields built here are closed under lowering the degree,
    so an empty top shell of width ``max(R, 1)`` means the field is finite and
    entirely inside the truncation.
    """
    for bi, b in enumerate(T.blocks):
        if b.spec.m == 0:
            continue
        R = max(max(op.degree_shift for op in b.ops), 1)
        if F.max_degree(bi) > b.spec.N - R:
            return False
    return True


def a_wandering(T, A, within: SlabField | None = None,
                tol: TolerancePolicy = DEFAULT_TOL) -> SlabField:
    """The A-wandering subspace: intersection of ``V_{A^c}^l W_A`` over all ``l``.

    Computed as the greatest fixpoint of ``X ↦ X ∩ ⋂_{j∉A} V_j X`` started at
    ``W_A``. ``meta`` records the iteration count, whether the result is
    certified finite-dimensional, and a ``truncation_limited`` flag.
    """
    A = _norm_subset(A, T.n)
    W = wandering_subspace(T, A, within, tol)
    Ac = [j for j in range(1, T.n + 1) if j not in A]
    cur = W
    it, cap = 0, _fixpoint_cap(T)
    converged = not Ac
    while Ac and it < cap:
        nxt = cur
        for j in Ac:
            nxt = nxt.intersect(push(T, j, cur, tol), tol)
        it += 1
        if nxt.dims() == cur.dims():
            cur = nxt
            converged = True
            break
        cur = nxt
    finite = _is_finite(T, cur)
    cur.meta = {"iterations": it, "converged": converged, "finite": finite,
                "truncation_limited": not (converged and finite)}
    return cur


def _orbit(T, A, D: SlabField, tol) -> SlabField:
    """Span of ``V_A^l D`` over all ``l`` that stay inside the truncation."""
    if not A:
        return SlabField(D.specs, D.spaces)
    for bi, b in enumerate(T.blocks):
        for i in A:
            if b.ops[i - 1].degree_shift == 0 and D.max_degree(bi) >= 0:
                raise InconsistencyError(f"V{i} has zero degree shift but a non-zero wandering part")
    acc = {key: [S.frame] for key, S in D.spaces.items() if S.dim}
    frontier = dict((key, S.frame) for key, S in D.spaces.items() if S.dim)
    # apply V_{p_m} powers first, then V_{p_{m-1}}, ... (rightmost factor first)
    for i in reversed(A):
        layer = dict(frontier)
        stack = list(frontier.items())
        while stack:
            (bi, k), M = stack.pop()
            op = T.blocks[bi].ops[i - 1]
            tgt = op.target(k)
            if degree(tgt) > op.spec.N:
                continue
            img = op.fiber(k) @ M
            acc.setdefault((bi, tgt), []).append(img)
            key = (bi, tgt)
            layer[key] = np.hstack([layer[key], img]) if key in layer else img
            stack.append((key, img))
        frontier = layer
    spaces = {}
    for key in D.spaces:
        bi = key[0]
        mats = acc.get(key)
        spaces[key] = Subspace.span(np.hstack(mats), T.blocks[bi].d, tol) if mats else Subspace.zero(T.blocks[bi].d)
    return SlabField(D.specs, spaces)


def _shift_fixpoint_zero(T, i, H: SlabField, tol) -> bool:
    cur = H
    for _ in range(_fixpoint_cap(T)):
        nxt = cur.intersect(push(T, i, cur, tol), tol)
        if nxt.dim == 0:
            return True
        if nxt.dims() == cur.dims():
            return False
        cur = nxt
    return False  # pragma: no cover


def _unitary_on(T, j, H: SlabField, tol) -> bool:
    img = push(T, j, H, tol)
    return all(img.spaces[key].equals(S, tol) for key, S in H.spaces.items())


# ---------------------------------------------------------------------------
# decomposition


@dataclass
class WoldSummand:
    A: tuple
    wandering: SlabField
    summand: SlabField
    labels: dict

    @property
    def fiber_dim(self) -> int:
        return self.wandering.dim

    @property
    def finite(self) -> bool:
        return bool(self.wandering.meta.get("finite", True))

    @property
    def truncation_limited(self) -> bool:
        return bool(self.wandering.meta.get("truncation_limited", False))

    @property
    def is_zero(self) -> bool:
        return self.summand.dim == 0

    def to_dict(self) -> dict:
        return {
            "A": list(self.A),
            "wandering_dim": self.fiber_dim,
            "summand_dim": self.summand.dim,
            "wandering_slabs": self.wandering.table(),
            "summand_slabs": self.summand.table(),
            "labels": {str(k): v for k, v in sorted(self.labels.items())},
            "truncation_limited": self.truncation_limited,
            "iterations": int(self.wandering.meta.get("iterations", 0)),
        }


@dataclass
class Decomposition:
    tuple_: object
    summands: dict
    R: int
    interior: int
    certificate: dict = field(default_factory=dict)

    def __getitem__(self, A) -> WoldSummand:
        return self.summands[tuple(sorted(A))]

    def nonzero(self) -> list:
        return [A for A, s in self.summands.items() if not s.is_zero]

    @property
    def truncation_limited(self) -> list:
        return [A for A, s in self.summands.items() if s.truncation_limited and not s.is_zero]

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "interior": self.interior,
            "certificate": self.certificate,
            "summands": {",".join(map(str, A)) or "{}": s.to_dict() for A, s in self.summands.items()},
            "nonzero": [list(A) for A in self.nonzero()],
            "truncation_limited": [list(A) for A in self.truncation_limited],
        }


def decompose(T, within: SlabField | None = None, tol: TolerancePolicy = DEFAULT_TOL,
              validate: bool = True) -> Decomposition:
    """Split the space into the summands ``H_A`` for all subsets ``A``.

    With ``within`` a reducing slab field, the decomposition of the restricted
    tuple is computed instead. Raises InconsistencyError when the summands do
    not tile the interior slabs orthogonally or a summand's classification
    (shift on ``A``, unitary off ``A``) fails.
    """
    _require_monomial(T)
    n = T.n
    summands = {}
    for A in subsets(n):
        D = a_wandering(T, A, within, tol)
        H = _orbit(T, A, D, tol)
        labels = {i: ("shift" if i in A else "unitary") for i in range(1, n + 1)}
        summands[A] = WoldSummand(A, D, H, labels)
    R = max(max(op.degree_shift for op in b.ops) for b in T.blocks)
    N = min(b.spec.N for b in T.blocks)
    interior = N - R
    cert = _certificate(T, summands, interior, within, tol)
    dec = Decomposition(T, summands, R, interior, cert)
    if validate:
        if not cert["complete"]:
            raise InconsistencyError(f"summand dimensions do not add up on slab {cert['first_gap']}")
        if cert["max_overlap"] >= tol.orth:
            raise InconsistencyError(f"summands overlap (projector product {cert['max_overlap']:.3e})")
        for A, s in summands.items():
            if s.is_zero:
                continue
            for i in range(1, n + 1):
                if i in A and not _shift_fixpoint_zero(T, i, s.summand, tol):
                    raise InconsistencyError(f"V{i} restricted to H_{A} is not a shift")
                if i not in A and not _unitary_on(T, i, s.summand, tol):
                    raise InconsistencyError(f"V{i} restricted to H_{A} is not unitary")
    return dec


def _certificate(T, summands, interior, within, tol) -> dict:
    complete, first_gap, overlap, checked = True, None, 0.0, 0
    for bi, b in enumerate(T.blocks):
        for k in lattice_points(b.spec.m, min(interior, b.spec.N)):
            key = (bi, k)
            target = b.d if within is None else within.spaces[key].dim
            parts = [s.summand.spaces[key] for s in summands.values() if s.summand.spaces[key].dim]
            checked += 1
            if sum(S.dim for S in parts) != target and complete:
                complete, first_gap = False, [bi, list(k)]
            for S1, S2 in combinations(parts, 2):
                overlap = max(overlap, op_norm(dag(S1.frame) @ S2.frame))
    return {"complete": complete, "first_gap": first_gap, "max_overlap": float(overlap),
            "slabs_checked": checked}


def wold_single(V: MonomialOp, tol: TolerancePolicy = DEFAULT_TOL):
    """Classical Wold split of one isometry: ``(shift_part, unitary_part)``."""
    if not isinstance(V, MonomialOp):
        raise UnsupportedError("wold_single needs a monomial operator")
    T = TwistedTuple([V])
    dec = decompose(T, tol=tol)
    return dec[(1,)].summand, dec[()].summand


def containment_check(T, S: SlabField, A, dec: Decomposition | None = None,
                      tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """Whether a reducing slab field lies inside ``H_A``."""
    A = _norm_subset(A, T.n)
    check_reducing(T, S, tol)
    dec = dec or decompose(T, tol=tol)
    H = dec[A].summand
    return H.contains(S, tol)


def check_reducing(T, S: SlabField, tol: TolerancePolicy = DEFAULT_TOL):
    """Raise NotReducingError unless every ``V_i`` and ``V_i*`` maps S into itself."""
    for i in range(1, T.n + 1):
        if not S.contains(push(T, i, S, tol), tol):
            raise NotReducingError(f"slab field is not invariant under V{i}")
        if not S.contains(pull(T, i, S, tol), tol):
            raise NotReducingError(f"slab field is not invariant under V{i}*")


# ---------------------------------------------------------------------------
# analytic models


def _segments_apply(T, i: int, segs):
    out = []
    for bi, k, M in segs:
        op = T.blocks[bi].ops[i - 1]
        tgt = op.target(k)
        if degree(tgt) > op.spec.N:
            raise TruncationError("orbit vector leaves the truncation")
        out.append((bi, tgt, op.fiber(k) @ M))
    return out


def _embed(T, segs) -> np.ndarray:
    n = total_dim(T)
    cols = sum(M.shape[1] for _, _, M in segs)
    Y = np.zeros((n, cols), dtype=complex)
    offs = block_offsets(T)
    c = 0
    for bi, k, M in segs:
        r = slab(T.blocks[bi].spec, k)
        Y[offs[bi] + r.start:offs[bi] + r.stop, c:c + M.shape[1]] = M
        c += M.shape[1]
    return Y


def apply_op(T, i: int, Y: np.ndarray) -> np.ndarray:
    """Apply ``V_i`` to vectors of the truncated space, raising if mass is lost."""
    out = np.zeros_like(Y)
    offs = block_offsets(T)
    for bi, b in enumerate(T.blocks):
        op = b.ops[i - 1]
        d = b.d
        idx = point_index(b.spec.m, b.spec.N)
        for p, k in enumerate(lattice_points(b.spec.m, b.spec.N)):
            blk = Y[offs[bi] + p * d:offs[bi] + (p + 1) * d]
            if not np.any(blk):
                continue
            tgt = op.target(k)
            if tgt not in idx:
                raise TruncationError("vector is pushed outside the truncation")
            q = idx[tgt]
            out[offs[bi] + q * d:offs[bi] + (q + 1) * d] += op.fiber(k) @ blk
    return out


def apply_twist(T, s: int, t: int, Y: np.ndarray) -> np.ndarray:
    mats = [fiber_kron(b.spec, b.spec.N, b.twist(s, t)) for b in T.blocks]
    out = np.zeros_like(Y)
    offs = block_offsets(T)
    for bi, M in enumerate(mats):
        o = offs[bi]
        out[o:o + M.shape[0]] = M @ Y[o:o + M.shape[0]]
    return out


@dataclass
class ModelData:
    """Analytic model of one summand together with its basis correspondence.

    ``Y`` holds the orbit vectors ``V_A^l η_b`` as columns, ordered like the
    model basis ``z^l ⊗ e_b`` truncated at ``level + 1``; the correspondence
    ``π_A`` is ``Y*`` on the summand.
    """

    A: tuple
    fiber_dim: int
    model: TwistedTuple | None
    basis: list
    tails: dict
    twists: dict
    level: int
    Y: np.ndarray | None

    @property
    def empty(self) -> bool:
        return self.fiber_dim == 0

    @property
    def Pi(self) -> np.ndarray:
        return dag(self.Y)


def restricted_data(T, D: SlabField, A, tol: TolerancePolicy = DEFAULT_TOL):
    """Matrices of ``V_q`` (q ∉ A) and ``U_st`` on an orthonormal basis of D.

    Returns ``(Y0, tails, twists)``; raises InconsistencyError when D fails
    to reduce one of these operators.
    """
    segs = [(bi, k, F) for (bi, k), F in D.basis()]
    Y0 = _embed(T, segs)
    tails, twists = {}, {}
    Ac = [j for j in range(1, T.n + 1) if j not in A]
    for q in Ac:
        img = _embed(T, _segments_apply(T, q, segs))
        M = dag(Y0) @ img
        if op_norm(img - Y0 @ M) >= tol.orth:
            raise InconsistencyError(f"wandering subspace does not reduce V{q}")
        tails[q] = M
    for s, t in combinations(range(1, T.n + 1), 2):
        img = apply_twist(T, s, t, Y0)
        M = dag(Y0) @ img
        if op_norm(img - Y0 @ M) >= tol.orth:
            raise InconsistencyError(f"wandering subspace does not reduce U{s}{t}")
        twists[(s, t)] = M
    return Y0, tails, twists


def build_model(T, A, dec: Decomposition | None = None,
                tol: TolerancePolicy = DEFAULT_TOL) -> ModelData:
    """Model tuple on ``H^2`` over the A-wandering subspace, with the orbit basis."""
    A = _norm_subset(A, T.n)
    dec = dec or decompose(T, tol=tol)
    summ = dec[A]
    D = summ.wandering
    if D.dim == 0:
        return ModelData(A, 0, None, [], {}, {}, 0, None)
    if summ.truncation_limited:
        raise UnsupportedError(f"wandering subspace for A={A} is not certified finite in this truncation")
    Y0, tails, twists = restricted_data(T, D, A, tol)
    f = Y0.shape[1]
    m = len(A)
    if m:
        lvl = None
        for bi, b in enumerate(T.blocks):
            hi = D.max_degree(bi)
            if hi < 0:
                continue
            smax = max(b.ops[i - 1].degree_shift for i in A)
            cand = (b.spec.N - hi) // smax - 1
            lvl = cand if lvl is None else min(lvl, cand)
        if lvl is None or lvl < 0:
            raise TruncationError(f"no room to build the model orbit for A={A}")
    else:
        lvl = 0
    spec = LatticeSpec(m, f, lvl + 1)
    model = model_tuple(spec, A, twists, tails, n=T.n)
    segs0 = [(bi, k, F) for (bi, k), F in D.basis()]
    orbit = {(0,) * m: segs0}
    for l in lattice_points(m, lvl + 1 if m else 0):
        if l in orbit:
            continue
        j = next(t for t, x in enumerate(l) if x > 0)
        prev = list(l)
        prev[j] -= 1
        orbit[l] = _segments_apply(T, A[j], orbit[tuple(prev)])
    Y = np.hstack([_embed(T, orbit[l]) for l in lattice_points(m, lvl + 1 if m else 0)])
    return ModelData(A, f, model, D.basis(), tails, twists, lvl, Y)


def model_residuals(T, md: ModelData, tol: TolerancePolicy = DEFAULT_TOL, rep: RelationReport | None = None):
    """Intertwining residuals ``π V_i = M_i π`` and ``π U_st = M(U_st) π`` on the orbit basis."""
    rep = rep or RelationReport(f"model for A={list(md.A)}")
    lab = ",".join(map(str, md.A)) or "{}"
    if md.empty:
        return rep
    Y = md.Y
    m, f, lvl = len(md.A), md.fiber_dim, md.level
    lo = basis_size(m, f, lvl) if m else f
    top = lvl + 1 if m else 0
    rep.add(f"pi_A isometric [A={lab}]", op_norm(dag(Y) @ Y - np.eye(Y.shape[1])), tol.residual)
    Ylo = Y[:, :lo]
    for i in range(1, T.n + 1):
        img = apply_op(T, i, Ylo)
        coef = dag(Y) @ img
        leak = op_norm(img - Y @ coef)
        op = md.model.ops[i - 1]
        Mi = op.to_matrix(lvl if m else 0)
        want = np.zeros_like(coef)
        want[:Mi.shape[0]] = Mi
        rep.add(f"pi V{i} = M{i} pi [A={lab}]", max(op_norm(coef - want), leak), tol.residual)
    for s, t in combinations(range(1, T.n + 1), 2):
        img = apply_twist(T, s, t, Ylo)
        coef = dag(Y) @ img
        want = np.zeros_like(coef)
        K = fiber_kron(md.model.spec, lvl if m else 0, md.model.twist(s, t))
        want[:K.shape[0]] = K
        rep.add(f"pi U{s}{t} = MU{s}{t} pi [A={lab}]", op_norm(coef - want) + op_norm(img - Y @ coef),
                tol.residual)
    return rep


def roundtrip_check(T, dec: Decomposition | None = None,
                    tol: TolerancePolicy = DEFAULT_TOL) -> RelationReport:
    """Rebuild every summand's model and check the assembled correspondence."""
    dec = dec or decompose(T, tol=tol)
    rep = RelationReport("model round trip")
    models = []
    for A in subsets(T.n):
        md = build_model(T, A, dec, tol)
        if not md.empty:
            models.append(md)
            model_residuals(T, md, tol, rep)
    if not models:
        raise InconsistencyError("every summand is empty")
    # the orbit columns of all summands must form an orthonormal basis of low slabs
    K = min(md.level + 1 if md.A else dec.interior for md in models)
    K = min(K, dec.interior)
    Yall = np.hstack([md.Y for md in models])
    offs = block_offsets(T)
    rows = np.zeros(Yall.shape[0], dtype=bool)
    for bi, b in enumerate(T.blocks):
        rows[offs[bi]:offs[bi] + basis_size(b.spec.m, b.d, K)] = True
    inside = np.linalg.norm(Yall[~rows], axis=0) < tol.orth
    Z = Yall[rows][:, inside]
    if Z.shape[0] != Z.shape[1]:
        res = float("inf")
    else:
        res = max(op_norm(dag(Z) @ Z - np.eye(Z.shape[1])), op_norm(Z @ dag(Z) - np.eye(Z.shape[0])))
    rep.add(f"Pi_V unitary on degrees <= {K}", res, tol.residual)
    rep.n_check = K
    return rep


def model_sum(T, dec: Decomposition | None = None, tol: TolerancePolicy = DEFAULT_TOL):
    """Direct sum of the non-empty summand models."""
    from .monomial_ops import DirectSum
    dec = dec or decompose(T, tol=tol)
    parts = [md.model for md in (build_model(T, A, dec, tol) for A in subsets(T.n)) if not md.empty]
    return DirectSum(parts)


def structure_checks(T, dec: Decomposition | None = None,
                     tol: TolerancePolicy = DEFAULT_TOL) -> RelationReport:
    """Slab-wise invariance facts behind the decomposition.

    * ``W_A`` is invariant under ``V_j`` and ``V_j*`` for ``j ∉ A``;
    * ``W_A ⊖ V_j W_A = W_{A ∪ {j}}``;
    * ``U_st W_A = W_A``;
    * the A-wandering subspace reduces ``V_j`` (j ∉ A) and every ``U_st``.
    """
    dec = dec or decompose(T, tol=tol)
    n = T.n
    rep = RelationReport("wandering structure")
    W = {A: wandering_subspace(T, A, tol=tol) for A in subsets(n)}
    inv = comp = tw = red = 0.0
    for A in subsets(n):
        WA = W[A]
        for j in range(1, n + 1):
            if j in A:
                continue
            img = push(T, j, WA, tol)
            back = pull(T, j, WA, tol)
            inv = max(inv, _excess(WA, img), _excess(WA, back))
            Aj = tuple(sorted(A + (j,)))
            for key, S in WA.spaces.items():
                P = S.projector - img.spaces[key].projector
                comp = max(comp, op_norm(P - W[Aj].spaces[key].projector))
        for s, t in combinations(range(1, n + 1), 2):
            img = twist_image(T, s, t, WA, tol)
            tw = max(tw, max(op_norm(S.projector - img.spaces[key].projector)
                             for key, S in WA.spaces.items()))
        D = dec[A].wandering
        if D.dim:
            for j in range(1, n + 1):
                if j not in A:
                    red = max(red, _excess(D, push(T, j, D, tol)), _excess(D, pull(T, j, D, tol)))
            for s, t in combinations(range(1, n + 1), 2):
                red = max(red, _excess(D, twist_image(T, s, t, D, tol)))
    rep.add("W_A invariant under V_j, V_j* (j not in A)", inv, tol.orth)
    rep.add("W_A - V_j W_A = W_(A+j)", comp, tol.orth)
    rep.add("U_st W_A = W_A", tw, tol.orth)
    rep.add("D_A reduces V_j (j not in A) and U_st", red, tol.orth)
    return rep


def _excess(F: SlabField, G: SlabField) -> float:
    """Largest slab-wise component of G outside F."""
    worst = 0.0
    for key, S in G.spaces.items():
        if S.dim:
            P = F.spaces[key]
            gap = S.frame - P.frame @ (dag(P.frame) @ S.frame)
            worst = max(worst, op_norm(gap))
    return worst
