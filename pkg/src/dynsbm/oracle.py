"""Brute-force reference fits for tiny instances.

Everything here is built from explicit matrices (``C``, ``W``, the design
``Upsilon = C W^T``) rather than the block statistics the estimator uses, so
the two routes check each other.
"""

import itertools
import math

import numpy as np

from . import clusters
from .core import MembershipSequence, build_full_clustering_matrix, n_class_pairs, n_pairs
from .enumeration import OracleLimits, count_family, enumerate_family
from .errors import DimensionMismatchError, OracleLimitError
from .estimator import FitResult, SupportFit, TIE_RTOL, _labels_key, build_fit_result
from .transform import TemporalBasis, coefficient_operator, get_basis

__all__ = ["OracleLimits", "enumerate_family", "count_family", "brute_force_fit",
           "best_support_explicit"]


def _pinv_solve(G, b):
    thr = 1e-10 * max(float(np.max(np.diag(G))), 1e-300)
    w, V = np.linalg.eigh(G)
    inv = np.where(w > thr, 1.0 / np.where(w > thr, w, 1.0), 0.0)
    return (V * inv) @ (V.T @ b)


def best_support_explicit(U, a, pen_curve, limits=None):
    """Exact ``min_J ||a - U_J d||^2 + pen(|J|)`` by enumerating supports.

    Uses sorting when ``U^T U`` is diagonal and all subsets otherwise
    (only when ``U`` has at most ``limits.max_subset_ml`` columns).
    """
    limits = OracleLimits() if limits is None else limits
    G = U.T @ U
    b = U.T @ a
    sq = float(a @ a)
    p = G.shape[0]
    off = G - np.diag(np.diag(G))
    best = (math.inf, None, None)
    if not np.any(np.abs(off) > 1e-9 * max(1.0, float(np.max(np.abs(G))))):
        g = np.diag(G)
        gain = np.where(g > 0, b * b / np.where(g > 0, g, 1.0), 0.0)
        order = np.argsort(-gain, kind="stable")
        for j in range(1, p + 1):
            J = np.sort(order[:j])
            rss = sq - float(gain[order[:j]].sum())
            obj = rss + pen_curve[j - 1]
            if obj < best[0]:
                best = (obj, J, rss)
    else:
        if p > limits.max_subset_ml:
            raise OracleLimitError(f"{p} coefficients exceed the subset limit {limits.max_subset_ml}")
        for j in range(1, p + 1):
            for J in itertools.combinations(range(p), j):
                J = np.array(J)
                beta = _pinv_solve(G[np.ix_(J, J)], b[J])
                rss = sq - float(b[J] @ beta)
                obj = rss + pen_curve[j - 1]
                if obj < best[0] - 1e-12 * max(1.0, abs(best[0]) if np.isfinite(best[0]) else 1.0):
                    best = (obj, J, rss)
    obj, J, rss = best
    d = np.zeros(p)
    d[J] = _pinv_solve(G[np.ix_(J, J)], b[J])
    rss = float(np.sum((a - U @ d) ** 2))
    return J, d, rss


def brute_force_fit(a, family, penalty_spec, basis=None, m_range=(1, 2), limits=None,
                    factor=None, clamp=True):
    """Global minimizer of the penalized objective by enumeration.

    ``a`` is the vectorized data of length ``N L``; ``family`` fixes ``n``,
    ``L`` and the switching/balance constraints; ``m_range`` is an iterable
    of class counts.  ``factor`` optionally maps ``m`` to a penalty
    multiplier.
    """
    limits = OracleLimits() if limits is None else limits
    n, L = family.n, family.L
    a = np.asarray(a, dtype=float)
    if a.shape != (n_pairs(n) * L,):
        raise DimensionMismatchError(f"a has shape {a.shape}, expected ({n_pairs(n) * L},)")
    if basis is None:
        basis = get_basis("dct", L)
    elif not isinstance(basis, TemporalBasis):
        basis = TemporalBasis(np.asarray(basis))
    ms = list(m_range) if not isinstance(m_range, int) else [m_range]
    total = 0.0
    for m in ms:
        limits.check(n, m, L)
        if m <= n:
            total += count_family(family, m)
    if total > limits.max_states:
        raise OracleLimitError(f"oracle would visit {total:.3g} sequences", estimated_states=total)

    best = None
    for m in ms:
        if m > n:
            continue
        try:
            family.check_feasible(m)
        except Exception:
            continue
        M = n_class_pairs(m)
        W = coefficient_operator(basis.matrix, M)
        f = 1.0 if factor is None else factor(m)
        pen = clusters.penalty_curve(penalty_spec, m, f)
        for labels in enumerate_family(family, m, limits=limits):
            C = build_full_clustering_matrix(MembershipSequence(labels, m), dense=True)
            U = C @ W.T
            J, d, rss = best_support_explicit(U, a, pen, limits)
            obj = rss + pen[len(J) - 1]
            cand = (obj, m, len(J), _labels_key(labels))
            if best is None or _wins(cand, best[0]):
                best = (cand, labels.copy(), J, d, pen[len(J) - 1], m, M)
    if best is None:
        raise OracleLimitError("no feasible class count in m_range")
    (obj, m, _, _), labels, J, d, pen_val, m, M = best
    coef = d.reshape(M, L, order="F")
    sfit = SupportFit(np.sort(J).astype(np.intp), coef, float(obj - pen_val), float(pen_val), "oracle")
    Y = _tensor_from_vector(a, n, L)
    return build_fit_result(Y, m, labels, sfit, basis, float(pen_val), clamp,
                            {"search": "oracle", "oracle_states": total})


def _wins(cand, cur):
    tol = TIE_RTOL * max(1.0, abs(cur[0]))
    if cand[0] < cur[0] - tol:
        return True
    if cand[0] > cur[0] + tol:
        return False
    return cand[1:] < cur[1:]


def _tensor_from_vector(a, n, L):
    from .core import devectorize
    return np.ascontiguousarray(devectorize(a, n, L).transpose(2, 0, 1))
