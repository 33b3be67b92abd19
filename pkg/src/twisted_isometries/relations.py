"""Residual checks for the defining and derived twisted-isometry relations.

Word identities are compared as graded rectangular matrices (exact, see
``monomial_ops.compare_polys``). Identities between degree-preserving
products such as range projections and matrix units are compared as square
sections ``P_N X P_N``; since every factor is homogeneous in degree, those
sections multiply exactly in the orders used here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from .errors import TruncationError, UnsupportedError
from .lattice import basis_size
from .linalg import DEFAULT_TOL, TolerancePolicy, commutator_norm, dag, op_norm
from .monomial_ops import compare_polys, max_check_level, op_matrix, twist_matrix


@dataclass
class RelationEntry:
    relation: str
    residual: float
    passed: bool
    where: tuple | None = None

    def to_dict(self) -> dict:
        out = {"relation": self.relation, "residual": float(self.residual), "pass": bool(self.passed)}
        if self.where is not None:
            out["where"] = list(self.where)
        return out


@dataclass
class RelationReport:
    title: str
    entries: list = field(default_factory=list)
    n_check: int | None = None

    def add(self, relation: str, residual: float, tol: float, where=None):
        self.entries.append(RelationEntry(relation, float(residual), bool(residual < tol), where))

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def max_residual(self) -> float:
        return max((e.residual for e in self.entries), default=0.0)

    @property
    def worst(self) -> RelationEntry | None:
        if not self.entries:
            return None
        return max(self.entries, key=lambda e: e.residual)

    def failures(self):
        return [e for e in self.entries if not e.passed]

    def merge(self, other: "RelationReport") -> "RelationReport":
        out = RelationReport(self.title, list(self.entries), self.n_check)
        out.entries.extend(other.entries)
        return out

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "n_check": self.n_check,
            "pass": self.passed,
            "max_residual": self.max_residual,
            "entries": [e.to_dict() for e in self.entries],
        }


def _check_level(T, words, n_check):
    if getattr(T, "opaque", False):
        raise UnsupportedError("relation checks need monomial operators")
    top = max_check_level(T, words)
    if n_check is None:
        n_check = top
    if n_check < 0 or n_check > top:
        raise TruncationError(f"check truncation {n_check} needs headroom; largest valid is {top}")
    return n_check


def _u(i, j, e=1):
    return ("u", i, j, e)


def _fmt_pow(name, e):
    return name if e == 1 else f"{name}^{e}"


def _run_identities(T, title, identities, n_check, tol) -> RelationReport:
    """Evaluate ``[(name, lhs_word, rhs_word), ...]`` on one common truncation."""
    words = [w for _, l, r in identities for w in (l, r)]
    n_check = _check_level(T, words, n_check)
    rep = RelationReport(title, n_check=n_check)
    for name, lhs, rhs in identities:
        res, where = compare_polys(T, [(1, lhs)], [(1, rhs)], n_check)
        rep.add(name, res, tol.residual, where)
    return rep


def verify_twisted(T, n_check: int | None = None, tol: TolerancePolicy = DEFAULT_TOL) -> RelationReport:
    """Check isometry, the cross relation, twist centrality and twist commutation."""
    n = T.n
    idx = range(1, n + 1)
    ids = [(f"V{i}* V{i} = I", [("a", i), ("v", i)], []) for i in idx]
    ids += [(f"V{i}* V{j} = U{i}{j}* V{j} V{i}*", [("a", i), ("v", j)], [_u(i, j, -1), ("v", j), ("a", i)])
            for i in idx for j in idx if i != j]
    ids += [(f"V{k} U{i}{j} = U{i}{j} V{k}", [("v", k), _u(i, j)], [_u(i, j), ("v", k)])
            for i, j in combinations(idx, 2) for k in idx]
    rep = _run_identities(T, "twisted isometry relations", ids, n_check, tol)
    pairs = list(combinations(idx, 2))
    for (i, j), (s, t) in combinations(pairs, 2):
        res = max(commutator_norm(b.twist(i, j), b.twist(s, t)) for b in T.blocks)
        rep.add(f"U{i}{j} U{s}{t} = U{s}{t} U{i}{j}", res, tol.residual)
    for i, j in pairs:
        res = 0.0
        for b in T.blocks:
            U = b.twist(i, j)
            res = max(res, op_norm(dag(U) @ U - np.eye(b.d)), op_norm(U @ dag(U) - np.eye(b.d)))
        rep.add(f"U{i}{j} unitary", res, tol.residual)
    return rep


def derived_checks(T, n_check: int | None = None, tol: TolerancePolicy = DEFAULT_TOL,
                   max_power: int = 3) -> RelationReport:
    """Consequences of the defining relations: commutation up to twist and its powers."""
    n = T.n
    idx = range(1, n + 1)
    ids = [(f"V{i} V{j} = U{i}{j} V{j} V{i}", [("v", i), ("v", j)], [_u(i, j), ("v", j), ("v", i)])
           for i, j in combinations(idx, 2)]
    ids += [(f"U{i}{j} = V{i}* V{j}* V{i} V{j}", [_u(i, j)], [("a", i), ("a", j), ("v", i), ("v", j)])
            for i in idx for j in idx if i != j]
    for p in idx:
        for q in idx:
            if p == q:
                continue
            for e in range(1, max_power + 1):
                if e == 1 and p < q:
                    continue  # already listed above
                lhs = [("v", p)] + [("v", q)] * e
                rhs = [_u(p, q, e)] + [("v", q)] * e + [("v", p)]
                ids.append((f"V{p} {_fmt_pow(f'V{q}', e)} = {_fmt_pow(f'U{p}{q}', e)} "
                            f"{_fmt_pow(f'V{q}', e)} V{p}", lhs, rhs))
    return _run_identities(T, "derived relations", ids, n_check, tol)


# ---------------------------------------------------------------------------
# square-section identities


def _low_columns(T, level: int) -> np.ndarray:
    """Column mask selecting basis vectors of total degree <= level in every summand."""
    cols = []
    for b in T.blocks:
        mask = np.zeros(b.spec.dim, dtype=bool)
        mask[:basis_size(b.spec.m, b.spec.d, level)] = True
        cols.append(mask)
    return np.concatenate(cols)


def _mpow(M, e):
    return np.linalg.matrix_power(M, e)


def matrix_units(T, max_index: int = 2, pair=(1, 2)) -> dict:
    """The matrices E_{pq,sr} for all indices up to ``max_index``.

    ``E_{pq,sr} = V1^p V2^q (1 - V1 V1*)(1 - V2 V2*) V2*^r V1*^s`` as square
    sections; the pair of operators is selected by ``pair``.
    """
    a, b = pair
    V1, V2 = op_matrix(T, a), op_matrix(T, b)
    I = np.eye(V1.shape[0])
    D = (I - V1 @ dag(V1)) @ (I - V2 @ dag(V2))
    r = range(max_index + 1)
    pw1 = [_mpow(V1, e) for e in r]
    pw2 = [_mpow(V2, e) for e in r]
    out = {}
    for p, q, s, t in product(r, r, r, r):
        out[(p, q, s, t)] = pw1[p] @ pw2[q] @ D @ dag(pw2[t]) @ dag(pw1[s])
    return out


def matrix_unit_check(T, max_index: int = 2, pair=(1, 2), tol: TolerancePolicy = DEFAULT_TOL) -> RelationReport:
    """Matrix-unit relations for the defect-generated system of a twisted pair.

    Checks ``E_{pq,sr} E_{ij,lk} = δ_si δ_rj E_{pq,lk}`` and
    ``E_{pq,sr}* = E_{sr,pq}``. Products are compared on basis vectors of
    degree at most ``N - 2·max_index·R`` (R the largest degree shift), where
    the sections multiply exactly.
    """
    R = max(max(blk.ops[k - 1].degree_shift for k in pair) for blk in T.blocks)
    R = max(R, 1)
    N = min(blk.spec.N for blk in T.blocks)
    if N < 2 * max_index * R + 2:
        raise TruncationError(f"matrix units up to {max_index} need N >= {2 * max_index * R + 2}")
    E = matrix_units(T, max_index, pair)
    cols = _low_columns(T, N - 2 * max_index * R)
    rep = RelationReport("matrix units", n_check=N - 2 * max_index * R)
    worst_adj, worst_prod = 0.0, 0.0
    worst_prod_key = None
    r = range(max_index + 1)
    for (p, q, s, t), M in E.items():
        worst_adj = max(worst_adj, op_norm(dag(M) - E[(s, t, p, q)]))
    for (p, q, s, rr), M in E.items():
        for i, j, l, k in product(r, r, r, r):
            lhs = M @ E[(i, j, l, k)]
            rhs = E[(p, q, l, k)] if (s == i and rr == j) else 0.0
            res = op_norm((lhs - rhs)[:, cols])
            if res > worst_prod:
                worst_prod, worst_prod_key = res, (p, q, s, rr, i, j, l, k)
    rep.add("E_{pq,sr}* = E_{sr,pq}", worst_adj, tol.residual)
    rep.add("E_{pq,sr} E_{ij,lk} = d_si d_rj E_{pq,lk}", worst_prod, tol.residual, worst_prod_key)
    P = E[(0, 0, 0, 0)]
    rep.add("E_{00,00} idempotent", op_norm(P @ P - P), tol.residual)
    return rep


def range_projection(T, i: int, m: int) -> np.ndarray:
    """``V_i^m V_i*^m`` as a square section (exact)."""
    V = op_matrix(T, i)
    Vm = _mpow(V, m)
    return Vm @ dag(Vm)


def projection_family_check(T, degrees, tol: TolerancePolicy = DEFAULT_TOL) -> RelationReport:
    """Commutation of the range projections ``P_i(m)`` among themselves and with the twists."""
    degrees = sorted(set(int(x) for x in degrees))
    if not degrees or degrees[0] < 0:
        raise ValueError("degrees must be non-negative integers")
    N = min(blk.spec.N for blk in T.blocks)
    if N < 2 * degrees[-1]:
        raise TruncationError(f"projection family up to degree {degrees[-1]} needs N >= {2 * degrees[-1]}")
    n = T.n
    P = {(i, m): range_projection(T, i, m) for i in range(1, n + 1) for m in degrees}
    rep = RelationReport("range projection family", n_check=N)
    proj = max(max(op_norm(M @ M - M), op_norm(M - dag(M))) for M in P.values())
    rep.add("P_i(m) orthogonal projection", proj, tol.residual)
    comm = max((commutator_norm(X, Y) for X, Y in combinations(P.values(), 2)), default=0.0)
    rep.add("[P_i(m), P_j(l)] = 0", comm, tol.residual)
    tw = 0.0
    for i, j in combinations(range(1, n + 1), 2):
        U = twist_matrix(T, i, j)
        tw = max(tw, max(commutator_norm(M, U) for M in P.values()))
    rep.add("[P_i(m), U_jk] = 0", tw, tol.residual)
    return rep
