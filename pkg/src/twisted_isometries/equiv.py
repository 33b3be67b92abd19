"""Wandering data, unitary equivalence of twisted isometries, and reducibility.

Two tuples are equivalent exactly when their wandering data are, summand by
summand. The per-summand question is finite dimensional: the *-closed
intertwiner space of two matrix tuples is a null space, and any invertible
element of it polarises to a unitary intertwiner.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import (InconsistencyError, InvalidInputError, NotReducingError, PreconditionError,
                     UnsupportedError)
from .lattice import basis_size, lattice_points
from .linalg import DEFAULT_TOL, Subspace, TolerancePolicy, dag, kernel, op_norm, polar_unitary
from .monomial_ops import TwistedTuple, block_offsets, op_matrix
from .relations import RelationReport
from .wold import (Decomposition, SlabField, apply_op, apply_twist, build_model, check_reducing,
                   decompose, restricted_data, subsets)

SEARCH_BUDGET = 32


@dataclass
class WanderingData:
    A: tuple
    fiber_dim: int
    tail_ops: dict
    twist_ops: dict

    def matrices(self) -> list:
        """Tails in ascending index order, then twists in lexicographic pair order."""
        return [self.tail_ops[q] for q in sorted(self.tail_ops)] + \
               [self.twist_ops[p] for p in sorted(self.twist_ops)]

    def conjugate(self, Q) -> "WanderingData":
        return WanderingData(self.A, self.fiber_dim,
                             {q: Q @ M @ dag(Q) for q, M in self.tail_ops.items()},
                             {p: Q @ M @ dag(Q) for p, M in self.twist_ops.items()})


@dataclass
class IntertwinerResult:
    verdict: str  # "equivalent", "not-equivalent" or "inconclusive"
    Q: np.ndarray | None = None
    residual: float = float("nan")
    space_dim: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def exists(self) -> bool:
        return self.verdict == "equivalent"

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict, "space_dim": self.space_dim}
        if self.exists:
            out["residual"] = float(self.residual)
        out.update(self.diagnostics)
        return out


def wandering_data(T, A, dec: Decomposition | None = None,
                   tol: TolerancePolicy = DEFAULT_TOL) -> WanderingData:
    A = tuple(sorted(A))
    dec = dec or decompose(T, tol=tol)
    s = dec[A]
    Ac = [q for q in range(1, T.n + 1) if q not in A]
    pairs = list(combinations(range(1, T.n + 1), 2))
    if s.wandering.dim == 0:
        z = np.zeros((0, 0), dtype=complex)
        return WanderingData(A, 0, {q: z for q in Ac}, {p: z for p in pairs})
    if s.truncation_limited:
        raise UnsupportedError(f"wandering subspace for A={A} is not certified finite")
    _, tails, twists = restricted_data(T, s.wandering, A, tol)
    return WanderingData(A, s.wandering.dim, tails, twists)


def intertwiner_space(X, Y, tol: TolerancePolicy = DEFAULT_TOL) -> list:
    """Basis of ``{T : T X_i = Y_i T and T X_i* = Y_i* T for all i}``.

    The basis is orthonormal for the Frobenius inner product.
    """
    X = [np.asarray(M, dtype=complex) for M in X]
    Y = [np.asarray(M, dtype=complex) for M in Y]
    if len(X) != len(Y):
        raise InvalidInputError("matrix lists differ in length")
    p = X[0].shape[1] if X else None
    q = Y[0].shape[0] if Y else None
    for A_, B_ in zip(X, Y):
        if A_.shape != (p, p) or B_.shape != (q, q):
            raise InvalidInputError("intertwiner_space needs square matrices of matching sizes")
    if p is None:
        raise InvalidInputError("need at least one matrix pair to fix dimensions")
    if p == 0 or q == 0:
        return []
    Ip, Iq = np.eye(p), np.eye(q)
    rows = []
    for A_, B_ in zip(X, Y):
        # vec(T A) - vec(B T) with column-major vec
        rows.append(np.kron(A_.T, Iq) - np.kron(Ip, B_))
        rows.append(np.kron(dag(A_).T, Iq) - np.kron(Ip, dag(B_)))
    scale = max(op_norm(M) for M in X + Y)
    K = kernel(np.vstack(rows), tol, scale=scale)
    return [K.frame[:, c].reshape((q, p), order="F") for c in range(K.dim)]


def _pair_residual(Q, X, Y) -> float:
    return max((op_norm(Q @ A_ - B_ @ Q) for A_, B_ in zip(X, Y)), default=0.0)


def equivalence_of_matrices(X, Y, seed: int = 0, budget: int = SEARCH_BUDGET,
                            tol: TolerancePolicy = DEFAULT_TOL) -> IntertwinerResult:
    """Search for a unitary Q with ``Q X_i Q* = Y_i`` for all i."""
    p = X[0].shape[0] if X else 0
    q = Y[0].shape[0] if Y else 0
    if p != q:
        return IntertwinerResult("not-equivalent", diagnostics={"reason": "dimension mismatch"})
    if p == 0:
        return IntertwinerResult("equivalent", np.zeros((0, 0), dtype=complex), 0.0, 0)
    basis = intertwiner_space(X, Y, tol)
    if not basis:
        return IntertwinerResult("not-equivalent", diagnostics={"reason": "zero intertwiner space"})
    rng = np.random.default_rng(seed)
    profile = []
    for attempt in range(budget):
        if attempt == 0 and len(basis) == 1:
            c = np.ones(1, dtype=complex)
        else:
            c = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
        M = sum(ci * B for ci, B in zip(c, basis))
        s = np.linalg.svd(M, compute_uv=False)
        profile.append(float(s[-1] / s[0]))
        if s[-1] <= max(tol.rank, 1e-8) * s[0]:
            continue
        Q = polar_unitary(M, tol)
        res = _pair_residual(Q, X, Y)
        if res < tol.residual:
            return IntertwinerResult("equivalent", Q, res, len(basis), {"attempts": attempt + 1})
    return IntertwinerResult("inconclusive", space_dim=len(basis),
                             diagnostics={"reason": "budget-exhausted",
                                          "min_singular_profile": sorted(profile)[:5]})


def unitary_equivalent(wdX: WanderingData, wdY: WanderingData, seed: int = 0,
                       budget: int = SEARCH_BUDGET, tol: TolerancePolicy = DEFAULT_TOL) -> IntertwinerResult:
    """Decide whether two wandering data are unitarily equivalent (tri-state)."""
    if wdX.A != wdY.A:
        raise InvalidInputError("wandering data belong to different subsets")
    if sorted(wdX.tail_ops) != sorted(wdY.tail_ops) or sorted(wdX.twist_ops) != sorted(wdY.twist_ops):
        raise InvalidInputError("wandering data have different operator counts")
    if wdX.fiber_dim != wdY.fiber_dim:
        return IntertwinerResult("not-equivalent", diagnostics={"reason": "dimension mismatch"})
    return equivalence_of_matrices(wdX.matrices(), wdY.matrices(), seed, budget, tol)


@dataclass
class GlueResult:
    Pi: np.ndarray
    report: RelationReport


def glue_global(T, T2, perA: dict, decX: Decomposition | None = None, decY: Decomposition | None = None,
                tol: TolerancePolicy = DEFAULT_TOL) -> GlueResult:
    """Assemble a global unitary from per-summand fiber unitaries and check it.

    On each summand the map is ``V_A^l η ↦ Ṽ_A^l Q_A η``. The report holds the
    residuals of ``Π V_i = Ṽ_i Π`` and ``Π U_st = Ũ_st Π`` on the orbit basis,
    and the unitarity of ``Π`` on the low-degree slabs covered by the orbits.
    """
    decX = decX or decompose(T, tol=tol)
    decY = decY or decompose(T2, tol=tol)
    if T.n != T2.n:
        raise InvalidInputError("tuples have different lengths")
    n1 = sum(b.spec.dim for b in T.blocks)
    n2 = sum(b.spec.dim for b in T2.blocks)
    Pi = np.zeros((n2, n1), dtype=complex)
    pieces = []
    for A in subsets(T.n):
        if decX[A].wandering.dim == 0 and decY[A].wandering.dim == 0:
            continue
        res = perA.get(A)
        if res is None or not res.exists:
            raise PreconditionError(f"no intertwiner for the summand A={A}")
        mx = build_model(T, A, decX, tol)
        my = build_model(T2, A, decY, tol)
        m, f = len(A), mx.fiber_dim
        lvl = min(mx.level, my.level)
        cols = basis_size(m, f, lvl + 1) if m else f
        Yx, Yy = mx.Y[:, :cols], my.Y[:, :cols]
        npts = cols // f
        Pi += Yy @ np.kron(np.eye(npts), res.Q) @ dag(Yx)
        lo = basis_size(m, f, lvl) if m else f
        pieces.append((A, Yx, lo, lvl))
    rep = RelationReport("global intertwiner")
    lab = lambda A: ",".join(map(str, A)) or "{}"
    for A, Yx, lo, _ in pieces:
        Ylo = Yx[:, :lo]
        for i in range(1, T.n + 1):
            lhs = Pi @ apply_op(T, i, Ylo)
            rhs = apply_op(T2, i, Pi @ Ylo)
            rep.add(f"Pi V{i} = W{i} Pi [A={lab(A)}]", op_norm(lhs - rhs), tol.residual)
        for s, t in combinations(range(1, T.n + 1), 2):
            lhs = Pi @ apply_twist(T, s, t, Ylo)
            rhs = apply_twist(T2, s, t, Pi @ Ylo)
            rep.add(f"Pi U{s}{t} = W{s}{t} Pi [A={lab(A)}]", op_norm(lhs - rhs), tol.residual)
    K = min([lvl + 1 if A else decX.interior for A, _, _, lvl in pieces] + [decX.interior])
    Yall = np.hstack([Yx for _, Yx, _, _ in pieces]) if pieces else np.zeros((n1, 0))
    rows = _low_rows(T, K)
    inside = np.linalg.norm(Yall[~rows], axis=0) < tol.orth
    Z = Yall[rows][:, inside]
    Pz = Pi @ Yall[:, inside]
    ok = Z.shape[0] == Z.shape[1]
    res = op_norm(dag(Pz) @ Pz - np.eye(Pz.shape[1])) if ok else float("inf")
    rep.add(f"Pi isometric on degrees <= {K}", res, tol.residual)
    rep.n_check = K
    return GlueResult(Pi, rep)


def _low_rows(T, K: int) -> np.ndarray:
    offs = block_offsets(T)
    total = sum(b.spec.dim for b in T.blocks)
    rows = np.zeros(total, dtype=bool)
    for bi, b in enumerate(T.blocks):
        rows[offs[bi]:offs[bi] + basis_size(b.spec.m, b.d, K)] = True
    return rows


@dataclass
class EquivalenceResult:
    verdict: str
    perA: dict
    residual: float
    glue: GlueResult | None = None

    def to_dict(self) -> dict:
        return {
            "equivalent": {"equivalent": True, "not-equivalent": False}.get(self.verdict, "inconclusive"),
            "verdict": self.verdict,
            "perA": {",".join(map(str, A)) or "{}": r.to_dict() for A, r in self.perA.items()},
            "residual": None if self.glue is None else float(self.residual),
        }


def equivalence(T, T2, seed: int = 0, tol: TolerancePolicy = DEFAULT_TOL,
                budget: int = SEARCH_BUDGET) -> EquivalenceResult:
    """Compare two twisted isometries through their wandering data and glue a witness."""
    if T.n != T2.n:
        raise InvalidInputError("tuples have different lengths")
    decX, decY = decompose(T, tol=tol), decompose(T2, tol=tol)
    perA = {}
    for idx, A in enumerate(subsets(T.n)):
        wx = wandering_data(T, A, decX, tol)
        wy = wandering_data(T2, A, decY, tol)
        perA[A] = unitary_equivalent(wx, wy, seed + idx, budget, tol)
    verdicts = {r.verdict for r in perA.values()}
    if "not-equivalent" in verdicts:
        return EquivalenceResult("not-equivalent", perA, float("nan"))
    if "inconclusive" in verdicts:
        return EquivalenceResult("inconclusive", perA, float("nan"))
    glue = glue_global(T, T2, perA, decX, decY, tol)
    verdict = "equivalent" if glue.report.passed else "inconclusive"
    return EquivalenceResult(verdict, perA, glue.report.max_residual, glue)


# ---------------------------------------------------------------------------
# defect operator and reducing subspaces


def defect_operator(T, A) -> np.ndarray:
    """Inclusion-exclusion sum ``Σ_F (-1)^|F| V_F V_F*`` over subsets F of A.

    ``V_F V_F* = V_{i_1}...V_{i_t} V_{i_t}*...V_{i_1}*``, evaluated on square
    sections, which is exact because each factor is homogeneous in degree.
    """
    A = tuple(sorted(A))
    if any(not 1 <= a <= T.n for a in A):
        raise InvalidInputError(f"{A} is not a subset of 1..{T.n}")
    mats = {i: op_matrix(T, i) for i in A}
    n = next(iter(mats.values())).shape[0] if mats else sum(b.spec.dim for b in T.blocks)
    out = np.zeros((n, n), dtype=complex)
    for r in range(len(A) + 1):
        for F in combinations(A, r):
            M = np.eye(n, dtype=complex)
            for i in F:
                M = M @ mats[i]
            out += (-1) ** r * (M @ dag(M))
    return out


def _model_parts(modelT: TwistedTuple):
    A = [i for i in range(1, modelT.n + 1) if modelT.ops[i - 1].degree_shift]
    tails = {q: modelT.ops[q - 1].fiber((0,) * modelT.spec.m)
             for q in range(1, modelT.n + 1) if q not in A}
    twists = {(s, t): modelT.twist(s, t) for s, t in combinations(range(1, modelT.n + 1), 2)}
    return A, tails, twists


def _reduces(M, D: Subspace, tol) -> bool:
    if D.dim == 0:
        return True
    for X in (M, dag(M)):
        img = X @ D.frame
        if op_norm(img - D.frame @ (dag(D.frame) @ img)) >= tol.orth:
            return False
    return True


def reducing_from_fiber(modelT: TwistedTuple, D: Subspace, tol: TolerancePolicy = DEFAULT_TOL) -> SlabField:
    """The subspace ``H^2 ⊗ D`` of a model tuple, for D reducing its fiber data."""
    if D.ambient_dim != modelT.d:
        raise InvalidInputError("fiber subspace has the wrong ambient dimension")
    _, tails, twists = _model_parts(modelT)
    for q, M in tails.items():
        if not _reduces(M, D, tol):
            raise NotReducingError(f"fiber subspace does not reduce the tail of V{q}")
    for p, M in twists.items():
        if not _reduces(M, D, tol):
            raise NotReducingError(f"fiber subspace does not reduce U{p[0]}{p[1]}")
    S = SlabField.constant(modelT, D)
    try:
        check_reducing(modelT, S, tol)
    except NotReducingError as exc:  # pragma: no cover
        raise InconsistencyError(f"fiber-reducing subspace fails slab-wise: {exc}") from exc
    S.meta["verified"] = True
    return S


def commutant(mats, d: int, tol: TolerancePolicy = DEFAULT_TOL) -> list:
    """Basis of the commutant of a self-adjoint set generated by ``mats``."""
    if not mats:
        mats = [np.eye(d, dtype=complex)]
    return intertwiner_space(mats, mats, tol)


def irreducibility_report(T, dec: Decomposition | None = None, seed: int = 0,
                          tol: TolerancePolicy = DEFAULT_TOL) -> dict:
    """Irreducibility of the generated algebra, with a reducing witness when it fails."""
    dec = dec or decompose(T, tol=tol)
    nz = dec.nonzero()
    out = {"nonzero_summands": [list(A) for A in nz], "single_summand": len(nz) == 1}
    if len(nz) != 1:
        out.update(criterion_met=False, verdict="reducible",
                   witness={"kind": "summand", "A": list(nz[0]) if nz else [],
                            "dim": dec[nz[0]].summand.dim if nz else 0})
        return out
    A = nz[0]
    from .wold import wandering_subspace
    W = wandering_subspace(T, A, tol=tol)
    out["wandering_dim"] = W.dim
    out["criterion_met"] = W.dim == 1
    try:
        wd = wandering_data(T, A, dec, tol)
    except UnsupportedError:
        out["verdict"] = "irreducible" if out["criterion_met"] else "undetermined"
        return out
    out["fiber_dim"] = wd.fiber_dim
    C = commutant(wd.matrices(), wd.fiber_dim, tol)
    out["commutant_dim"] = len(C)
    if len(C) == 1:
        out["verdict"] = "irreducible"
        return out
    out["verdict"] = "reducible"
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(len(C)) + 1j * rng.standard_normal(len(C))
    H = sum(ci * B for ci, B in zip(c, C))
    H = H + dag(H)
    w, v = np.linalg.eigh(H)
    sel = np.abs(w - w[0]) < 1e-8 * max(1.0, np.abs(w).max())
    D = Subspace(v[:, sel], wd.fiber_dim)
    md = build_model(T, A, dec, tol)
    witness = {"kind": "fiber", "A": list(A), "fiber_subspace_dim": D.dim}
    try:
        S = reducing_from_fiber(md.model, D, tol)
        witness["verified"] = bool(S.meta.get("verified"))
    except NotReducingError as exc:  # pragma: no cover
        witness["verified"] = False
        witness["error"] = str(exc)
    out["witness"] = witness
    return out
