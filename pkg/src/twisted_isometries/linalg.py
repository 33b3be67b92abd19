"""Dense complex linear algebra and subspace lattice operations.

Everything here works on small dense ``numpy`` arrays. Subspaces are stored
as orthonormal frames; two subspaces are compared through their projectors,
never through their frames, since frames are only defined up to rotation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContainmentError, DimensionError, InvalidInputError, RankError


@dataclass(frozen=True)
class TolerancePolicy:
    """Thresholds used for orthogonality, rank and residual decisions.

    ``rank`` is relative to the largest singular value of the matrix being
    inspected; ``orth`` bounds projector distances; ``residual`` bounds the
    norm of relation defects.
    """

    orth: float = 1e-9
    rank: float = 1e-10
    residual: float = 1e-10

    def __post_init__(self):
        for name in ("orth", "rank", "residual"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"tolerance {name!r} must be strictly positive")

    def with_overrides(self, **kw) -> "TolerancePolicy":
        vals = {"orth": self.orth, "rank": self.rank, "residual": self.residual}
        vals.update({k: float(v) for k, v in kw.items() if v is not None})
        return TolerancePolicy(**vals)


DEFAULT_TOL = TolerancePolicy()


def dag(M):
    return np.conjugate(np.transpose(M))


def as_cmat(M) -> np.ndarray:
    """Coerce to a 2-d complex array with finite entries."""
    A = np.asarray(M, dtype=complex)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2:
        raise InvalidInputError(f"expected a matrix, got array of shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    return A


def op_norm(M) -> float:
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


class Subspace:
    """A subspace of C^ambient_dim, held as an orthonormal frame (columns)."""

    __slots__ = ("ambient_dim", "frame")

    def __init__(self, frame, ambient_dim: int | None = None):
        F = np.asarray(frame, dtype=complex)
        if F.ndim == 1:
            F = F.reshape(-1, 1)
        if ambient_dim is None:
            ambient_dim = F.shape[0]
        if F.shape[0] != ambient_dim:
            raise DimensionError(f"frame has {F.shape[0]} rows, ambient is {ambient_dim}")
        self.ambient_dim = int(ambient_dim)
        self.frame = F
        self.frame.setflags(write=False)

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(np.zeros((ambient_dim, 0), dtype=complex), ambient_dim)

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(np.eye(ambient_dim, dtype=complex), ambient_dim)

    @classmethod
    def span(cls, vectors, ambient_dim: int | None = None, tol: TolerancePolicy = DEFAULT_TOL):
        """Orthonormal frame for the column span of ``vectors``."""
        V = np.asarray(vectors, dtype=complex)
        if V.ndim == 1:
            V = V.reshape(-1, 1)
        if ambient_dim is None:
            ambient_dim = V.shape[0]
        if V.shape[1] == 0 or V.shape[0] == 0:
            return cls.zero(ambient_dim)
        U, s, _ = np.linalg.svd(V, full_matrices=False)
        if s.size == 0 or s[0] == 0:
            return cls.zero(ambient_dim)
        r = int(np.sum(s > tol.rank * max(s[0], 1.0)))
        return cls(U[:, :r], ambient_dim)

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.frame @ dag(self.frame)

    def contains(self, other: "Subspace", tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        if other.dim == 0:
            return True
        gap = other.frame - self.frame @ (dag(self.frame) @ other.frame)
        return op_norm(gap) < tol.orth

    def distance(self, other: "Subspace") -> float:
        if self.ambient_dim != other.ambient_dim:
            raise DimensionError("ambient dimensions differ")
        return op_norm(self.projector - other.projector)

    def equals(self, other: "Subspace", tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        return self.dim == other.dim and self.distance(other) < tol.orth

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"


def kernel(M, tol: TolerancePolicy = DEFAULT_TOL, scale: float = 0.0) -> Subspace:
    """Null space of ``M`` as a Subspace of its domain.

    Singular values below ``tol.rank * max(s_max, scale)`` count as zero. Pass
    the size of the data ``M`` was built from as ``scale`` when M may be pure
    rounding noise, which a purely relative cut would treat as full rank.
    """
    M = as_cmat(M)
    rows, cols = M.shape
    if cols == 0:
        return Subspace.zero(0)
    if rows == 0:
        return Subspace.full(cols)
    try:
        _, s, vh = np.linalg.svd(M, full_matrices=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise InvalidInputError(str(exc)) from exc
    smax = max(s[0] if s.size else 0.0, scale)
    if smax == 0.0:
        return Subspace.full(cols)
    rank = int(np.sum(s > tol.rank * smax))
    return Subspace(dag(vh[rank:, :]), cols)


def intersect(spaces, tol: TolerancePolicy = DEFAULT_TOL) -> Subspace:
    """Intersection of subspaces via the top eigenspace of the mean projector.

    A unit vector lies in every subspace iff its Rayleigh quotient for the
    averaged projector equals one, so the intersection is the eigenvalue-1
    cluster. The mean is symmetric in its arguments.
    """
    spaces = list(spaces)
    if not spaces:
        raise InvalidInputError("intersect needs at least one subspace")
    n = spaces[0].ambient_dim
    if any(S.ambient_dim != n for S in spaces):
        raise DimensionError("ambient dimensions differ")
    if len(spaces) == 1:
        return spaces[0]
    if any(S.dim == 0 for S in spaces):
        return Subspace.zero(n)
    live = [S for S in spaces if S.dim < n]
    if not live:
        return Subspace.full(n)
    if len(live) == 1:
        return live[0]
    P = sum(S.projector for S in live) / len(live)
    P = (P + dag(P)) / 2
    w, v = np.linalg.eigh(P)
    keep = w > 1.0 - tol.rank
    return Subspace(v[:, keep], n)


def subspace_sum(spaces, ambient_dim: int, tol: TolerancePolicy = DEFAULT_TOL) -> Subspace:
    frames = [S.frame for S in spaces if S.dim]
    if not frames:
        return Subspace.zero(ambient_dim)
    return Subspace.span(np.hstack(frames), ambient_dim, tol)


def ortho_complement_within(S: Subspace, T: Subspace, tol: TolerancePolicy = DEFAULT_TOL) -> Subspace:
    """S ⊖ T, for T contained in S."""
    if S.ambient_dim != T.ambient_dim:
        raise DimensionError("ambient dimensions differ")
    if not S.contains(T, tol):
        raise ContainmentError("T is not contained in S")
    if T.dim == 0:
        return S
    coeffs = kernel(dag(T.frame) @ S.frame, tol)
    out = Subspace(S.frame @ coeffs.frame, S.ambient_dim)
    if out.dim != S.dim - T.dim:  # pragma: no cover
        raise ContainmentError("complement dimension mismatch")
    return out


def image(M, S: Subspace, tol: TolerancePolicy = DEFAULT_TOL) -> Subspace:
    """Subspace spanned by ``M @ S``."""
    M = as_cmat(M)
    return Subspace.span(M @ S.frame, M.shape[0], tol)


def is_isometry(M, tol: TolerancePolicy = DEFAULT_TOL):
    """Return ``(flag, residual)`` with residual = ||M*M - I||."""
    M = as_cmat(M)
    if M.shape[0] < M.shape[1]:
        return False, float("inf")
    res = op_norm(dag(M) @ M - np.eye(M.shape[1]))
    return res < tol.residual, res


def is_unitary(M, tol: TolerancePolicy = DEFAULT_TOL):
    M = as_cmat(M)
    if M.shape[0] != M.shape[1]:
        return False, float("inf")
    I = np.eye(M.shape[0])
    res = max(op_norm(dag(M) @ M - I), op_norm(M @ dag(M) - I))
    return res < tol.residual, res


def commutator_norm(X, Y) -> float:
    return op_norm(X @ Y - Y @ X)


def random_unitary(d: int, seed: int) -> np.ndarray:
    """Haar unitary from the QR factorisation of a complex Ginibre matrix."""
    if d < 1:
        raise InvalidInputError("random_unitary needs d >= 1")
    rng = np.random.default_rng(seed)
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph[None, :]


def random_commuting_unitaries(d: int, count: int, seed: int):
    """``count`` unitaries that are simultaneously diagonal in a Haar basis."""
    rng = np.random.default_rng(seed)
    Q = random_unitary(d, int(rng.integers(2**31)))
    out = []
    for _ in range(count):
        phases = np.exp(2j * np.pi * rng.random(d))
        out.append(Q @ np.diag(phases) @ dag(Q))
    return out


def polar_unitary(M, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Unitary factor Q of the polar decomposition M = Q P."""
    M = as_cmat(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionError("polar_unitary needs a square matrix")
    if M.shape[0] == 0:
        return M.copy()
    W, s, Vh = np.linalg.svd(M)
    if s[-1] <= tol.rank * s[0]:
        raise RankError(f"matrix is singular (sigma_min/sigma_max = {s[-1] / s[0]:.3e})")
    return W @ Vh
