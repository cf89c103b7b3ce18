"""Orthogonal temporal bases and coefficient transforms ``D = Q H^T``."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatchError, InvalidBasisError

ORTHO_TOL = 1e-10
EXHAUSTIVE_MAX_L = 16


@dataclass(frozen=True)
class HAssumptionReport:
    e1_ok: bool
    entry_bound_ok: bool
    binary_sup_ok: bool
    binary_exhaustive: bool
    max_entry: float
    worst_binary_excess: float

    @property
    def all_ok(self):
        return self.e1_ok and self.entry_bound_ok and self.binary_sup_ok


@dataclass(frozen=True, eq=False)
class TemporalBasis:
    """An orthogonal ``L x L`` matrix ``H`` acting on time series.

    Row ``j`` of ``H`` is the ``j``-th basis vector, so the coefficients of a
    row vector ``q`` are ``H q^T``.
    """

    matrix: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        H = np.array(self.matrix, dtype=float, copy=True)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise InvalidBasisError(f"basis must be square, got shape {H.shape}")
        if orthogonality_error(H) > ORTHO_TOL:
            raise InvalidBasisError(
                f"basis is not orthogonal (error {orthogonality_error(H):.3g})")
        H.setflags(write=False)
        object.__setattr__(self, "matrix", H)

    @property
    def L(self):
        return self.matrix.shape[0]

    @property
    def is_orthogonal(self):
        return orthogonality_error(self.matrix) <= ORTHO_TOL

    @cached_property
    def h_report(self):
        return check_h_assumption(self.matrix)

    @property
    def satisfies_h_assumption(self):
        return self.h_report.all_ok


def orthogonality_error(H):
    H = np.asarray(H, dtype=float)
    eye = np.eye(H.shape[0])
    return max(np.max(np.abs(H @ H.T - eye)), np.max(np.abs(H.T @ H - eye)))


def cosine_basis(L):
    """Orthonormal DCT-II matrix; first row constant ``1/sqrt(L)``."""
    if L < 1:
        raise ValueError("L must be positive")
    j = np.arange(L)[:, None]
    l = np.arange(L)[None, :]
    H = np.sqrt(2.0 / L) * np.cos(np.pi * j * (2 * l + 1) / (2 * L))
    H[0, :] = 1.0 / np.sqrt(L)
    return TemporalBasis(H, name="cosine")


def _is_power_of_two(L):
    return L >= 1 and (L & (L - 1)) == 0


def walsh_basis(L):
    """Sequency-ordered Walsh basis, entries ``+-1/sqrt(L)``; ``L`` a power of two.

    Row ``j`` is the sign pattern of the ``j``-th cosine, ordered by the
    number of sign changes, so row 0 is constant.
    """
    if not _is_power_of_two(L):
        raise InvalidBasisError(f"Walsh basis needs L a power of two, got {L}")
    had = np.ones((1, 1))
    while had.shape[0] < L:
        had = np.block([[had, had], [had, -had]])
    changes = np.count_nonzero(np.diff(had, axis=1) != 0, axis=1)
    had = had[np.argsort(changes, kind="stable")]
    return TemporalBasis(had / np.sqrt(L), name="walsh")


def haar_basis(L):
    """Orthonormal Haar wavelet matrix with a constant first row; ``L`` a power of two."""
    if not _is_power_of_two(L):
        raise InvalidBasisError(f"Haar basis needs L a power of two, got {L}")
    rows = [np.ones(L) / np.sqrt(L)]
    width = L
    while width > 1:
        half = width // 2
        for start in range(0, L, width):
            r = np.zeros(L)
            r[start:start + half] = 1.0
            r[start + half:start + width] = -1.0
            rows.append(r / np.sqrt(width))
        width = half
    # coarse-to-fine order
    return TemporalBasis(np.array(rows), name="haar")


def dct_basis(L):
    """Default temporal basis.

    For ``L`` a power of two this is the sequency-ordered Walsh basis, an
    even-symmetric square-wave cosine system whose entries all have modulus
    ``1/sqrt(L)``, so both H-assumption checks hold.  For other ``L`` the
    orthonormal DCT-II is returned; it keeps ``H 1 = sqrt(L) e1`` but its
    entries reach ``sqrt(2/L)``.
    """
    if L < 1:
        raise ValueError("L must be positive")
    if _is_power_of_two(L):
        b = walsh_basis(L)
    else:
        b = cosine_basis(L)
    return TemporalBasis(b.matrix, name="dct")


BASES = {
    "dct": dct_basis,
    "cosine": cosine_basis,
    "walsh": walsh_basis,
    "haar": haar_basis,
}


def get_basis(name, L):
    try:
        return BASES[name](L)
    except KeyError:
        raise InvalidBasisError(f"unknown basis {name!r}; choose from {sorted(BASES)}") from None


def _binary_vectors(L):
    codes = np.arange(2 ** L, dtype=np.int64)[:, None]
    return ((codes >> np.arange(L)) & 1).astype(float)


def check_h_assumption(H, tol=1e-10, n_random=10_000, seed=0):
    """Check ``H 1 = sqrt(L) e1`` and ``||H^T w||_inf <= ||w||_1 / sqrt(L)``.

    The binary condition is checked over every ``w`` in ``{0,1}^L`` when
    ``L <= 16`` and over ``n_random`` random binary vectors otherwise.
    """
    if isinstance(H, TemporalBasis):
        H = H.matrix
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InvalidBasisError(f"basis must be square, got shape {H.shape}")
    if orthogonality_error(H) > ORTHO_TOL:
        raise InvalidBasisError("basis is not orthogonal")
    L = H.shape[0]
    root = np.sqrt(L)
    e1 = np.zeros(L)
    e1[0] = root
    e1_ok = bool(np.max(np.abs(H @ np.ones(L) - e1)) <= tol)
    max_entry = float(np.max(np.abs(H)))
    entry_ok = bool(max_entry <= 1.0 / root + 1e-12)

    exhaustive = L <= EXHAUSTIVE_MAX_L
    if exhaustive:
        omega = _binary_vectors(L)
    else:
        rng = np.random.default_rng(seed)
        omega = rng.integers(0, 2, size=(n_random, L)).astype(float)
    # row r of omega @ H is (H^T omega_r)^T
    lhs = np.max(np.abs(omega @ H), axis=1)
    rhs = omega.sum(axis=1) / root
    excess = float(np.max(lhs - rhs))
    return HAssumptionReport(
        e1_ok=e1_ok,
        entry_bound_ok=entry_ok,
        binary_sup_ok=bool(excess <= tol),
        binary_exhaustive=exhaustive,
        max_entry=max_entry,
        worst_binary_excess=excess,
    )


def _matrix(H):
    return H.matrix if isinstance(H, TemporalBasis) else np.asarray(H, dtype=float)


def to_coefficients(Q, H):
    """``D = Q H^T`` for ``Q`` of shape ``(M, L)``."""
    H = _matrix(H)
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != H.shape[0]:
        raise DimensionMismatchError(f"Q has shape {Q.shape}, basis has L={H.shape[0]}")
    return Q @ H.T


def from_coefficients(D, H):
    """``Q = D H``, the inverse of :func:`to_coefficients`."""
    H = _matrix(H)
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[1] != H.shape[0]:
        raise DimensionMismatchError(f"D has shape {D.shape}, basis has L={H.shape[0]}")
    return D @ H


def coefficient_operator(H, M):
    """``W = H kron I_M`` so that ``vec(Q H^T) = W vec(Q)``."""
    return np.kron(_matrix(H), np.eye(M))


def vec(X):
    """Column-stacking vectorization."""
    return np.asarray(X).reshape(-1, order="F")


def support_of(D, tol=0.0):
    """Flat indices ``k + j*M`` of the nonzero entries of ``D``."""
    return np.flatnonzero(np.abs(vec(D)) > tol)


def truncate(D, support):
    """Zero every coefficient outside ``support`` (flat ``vec`` indices)."""
    D = np.asarray(D, dtype=float)
    flat = np.zeros(D.size)
    idx = np.asarray(support, dtype=np.intp)
    flat[idx] = vec(D)[idx]
    return flat.reshape(D.shape, order="F")
