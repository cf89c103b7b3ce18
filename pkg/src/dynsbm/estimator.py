"""Penalized least-squares estimation of a dynamic stochastic block model.

For a fixed membership sequence the least-squares problem only depends on
the per-slice class-pair sums ``T[l, k]`` and counts ``s[l, k]`` of the
data, so every candidate clustering is scored from those block statistics.
``restricted_least_squares`` and ``projection_matrix`` give the same
quantities from explicit design matrices.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.cluster.vq import kmeans2

from . import clusters
from .clusters import ClusterFamily, PenaltySpec
from .core import (
    MembershipSequence,
    canonical_labels,
    class_pair_index,
    devectorize,
    expand_probability,
    n_class_pairs,
    n_from_pairs,
    q_to_connectivity,
    vectorize,
)
from .enumeration import OracleLimits, enumerate_family
from .errors import DimensionMismatchError, InfeasibleFamilyError, SingularDesignError
from .transform import TemporalBasis, coefficient_operator, get_basis, vec

PINV_RTOL = 1e-10
EXACT_BLOCK_MAX_L = 12
TIE_RTOL = 1e-9


@dataclass
class EstimatorConfig:
    m_max: int = 3
    m_min: int = 1
    n0: int = 0
    family: str = clusters.FREE
    aleph1: float = 0.5
    aleph2: float = 2.0
    basis: object = "dct"
    penalty_scale: float = 1.0
    c1: float = 11.0
    c2: float = 5.5
    c3: float = 25.0
    clustering_term: str = "bound"
    search: str = "heuristic"
    restarts: int = 4
    j_selection: str = "auto"
    clamp_output: bool = True
    seed: int = 0
    max_sweeps: int = 50
    lloyd_iters: int = 10

    def __post_init__(self):
        if self.m_min < 1 or self.m_max < self.m_min:
            raise ValueError("need 1 <= m_min <= m_max")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.search not in ("heuristic", "exhaustive"):
            raise ValueError(f"unknown search mode {self.search!r}")
        if self.j_selection not in ("auto", "exact-diagonal", "greedy", "exhaustive"):
            raise ValueError(f"unknown j_selection {self.j_selection!r}")

    def cluster_family(self, n, L):
        return ClusterFamily(n=n, L=L, n0=min(self.n0, n), kind=self.family,
                             aleph1=self.aleph1, aleph2=self.aleph2)

    def penalty_spec(self, n, L):
        return PenaltySpec(self.cluster_family(n, L), c1=self.c1, c2=self.c2, c3=self.c3,
                           scale=self.penalty_scale, clustering_term=self.clustering_term)

    def temporal_basis(self, L):
        if isinstance(self.basis, TemporalBasis):
            if self.basis.L != L:
                raise DimensionMismatchError(f"basis has L={self.basis.L}, data has L={L}")
            return self.basis
        return get_basis(self.basis, L)

    def m_values(self, n):
        return range(self.m_min, min(self.m_max, n) + 1)


@dataclass
class SupportFit:
    """Best support and coefficients for one fixed clustering."""

    support: np.ndarray
    coef: np.ndarray
    rss: float
    penalty: float
    method: str

    @property
    def objective(self):
        return self.rss + self.penalty


@dataclass
class FitResult:
    m: int
    support: np.ndarray
    coef: np.ndarray
    membership: MembershipSequence
    objective: float
    penalty_value: float
    rss: float
    lam: np.ndarray
    lam_raw: np.ndarray
    basis: TemporalBasis
    diagnostics: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.membership.n

    @property
    def L(self):
        return self.membership.L

    @property
    def M(self):
        return n_class_pairs(self.m)

    @property
    def d(self):
        return vec(self.coef)

    @property
    def Q(self):
        return self.coef @ self.basis.matrix

    @property
    def theta(self):
        """Fitted ``theta = C W^T d`` (before clamping)."""
        return vectorize(self.lam_raw)

    def summary(self):
        return {
            "m": self.m,
            "support_size": int(len(self.support)),
            "support": [int(j) for j in self.support],
            "objective": float(self.objective),
            "penalty": float(self.penalty_value),
            "rss": float(self.rss),
            "basis": self.basis.name,
            "labels": self.membership.labels.tolist(),
            "coef": self.coef.tolist(),
            **{k: v for k, v in self.diagnostics.items() if k != "per_m"},
            "per_m": self.diagnostics.get("per_m", []),
        }


# ---------------------------------------------------------------------------
# data handling

def as_data_tensor(data, n=None, L=None):
    """Return the data as a float ``(L, n, n)`` array of symmetric slices."""
    arr = np.asarray(data)
    if arr.ndim == 3:
        if arr.shape[0] != arr.shape[1]:
            raise DimensionMismatchError(f"expected (n, n, L) tensor, got {arr.shape}")
        return np.ascontiguousarray(arr.transpose(2, 0, 1), dtype=float)
    if arr.ndim == 1:
        if n is None:
            if L is None:
                raise DimensionMismatchError("need n or L to unpack a vectorized input")
            n = n_from_pairs(arr.size // L)
        lam = devectorize(arr.astype(float), n, L)
        return np.ascontiguousarray(lam.transpose(2, 0, 1))
    raise DimensionMismatchError(f"cannot interpret data of shape {arr.shape}")


def block_stats(Y, labels, m):
    """Class-pair sums ``T`` and pair counts ``s``, both ``(L, M)``.

    ``Y`` is ``(L, n, n)`` with zero diagonal; ``labels`` is ``(L, n)``.
    """
    Z = np.eye(m)[labels]
    Tm = Z.transpose(0, 2, 1) @ (Y @ Z)
    sizes = Z.sum(axis=1)
    k1, k2 = class_pair_index(m)
    diag = k1 == k2
    T = Tm[:, k1, k2]
    T[:, diag] *= 0.5
    s = sizes[:, k1] * sizes[:, k2]
    s[:, diag] = sizes[:, k1[diag]] * (sizes[:, k1[diag]] - 1) / 2
    return T, np.rint(s).astype(np.int64)


def _solve_spd(G, b):
    """Solve ``G x = b`` by Cholesky, falling back to a thresholded pseudo-inverse."""
    if G.size == 0:
        return np.zeros(0)
    try:
        c, low = linalg.cho_factor(G, check_finite=False)
        return linalg.cho_solve((c, low), b, check_finite=False)
    except linalg.LinAlgError:
        thr = PINV_RTOL * max(float(np.max(np.diag(G))), 0.0)
        return np.linalg.pinv(G, rcond=0.0, hermitian=True) @ b if thr == 0 else \
            _pinv_threshold(G, thr) @ b


def _pinv_threshold(G, thr):
    w, V = np.linalg.eigh(G)
    inv = np.where(w > thr, 1.0 / np.where(w > thr, w, 1.0), 0.0)
    return (V * inv) @ V.T


# ---------------------------------------------------------------------------
# support selection from block statistics

def _block_grams(s, H):
    """``G_k = H diag(s[:, k]) H^T`` for every class pair, shape ``(M, L, L)``."""
    return np.einsum("jl,lk,il->kji", H, s.astype(float), H)


def _best_prefix(gains_path, sq_norm, pen_curve):
    explained = np.cumsum(gains_path)
    rss = sq_norm - explained
    obj = rss + pen_curve[:len(rss)]
    j = int(np.argmin(obj))
    return j + 1, float(rss[j])


def _select_diagonal(b, s0, sq_norm, pen_curve):
    sk = s0.astype(float)[:, None]
    safe = np.where(sk > 0, sk, 1.0)
    dt = np.where(sk > 0, b / safe, 0.0)
    gain = np.where(sk > 0, b * b / safe, 0.0)
    g = vec(gain)
    order = np.argsort(-g, kind="stable")
    size, rss = _best_prefix(g[order], sq_norm, pen_curve)
    support = np.sort(order[:size])
    coef = np.zeros(g.size)
    coef[support] = vec(dt)[support]
    return support, coef.reshape(b.shape, order="F"), rss


def _greedy_path(b, grams):
    """Forward selection on a block-diagonal Gram matrix.

    Returns the order of flat indices ``k + j*M`` and the explained energy
    each addition contributes.
    """
    M, L = b.shape
    diag = np.einsum("kjj->kj", grams)
    thr = PINV_RTOL * max(float(diag.max(initial=0.0)), 1e-300)
    selected = [[] for _ in range(M)]
    gains = np.zeros((M, L))
    for k in range(M):
        gains[k] = np.where(diag[k] > thr, b[k] ** 2 / np.where(diag[k] > thr, diag[k], 1.0), 0.0)
    admissible = diag > thr
    order, path = [], []
    while True:
        cand = np.where(admissible, gains, -np.inf)
        flat = vec(cand)
        best = int(np.argmax(flat))
        if not np.isfinite(flat[best]):
            break
        k, j = best % M, best // M
        order.append(best)
        path.append(max(float(gains[k, j]), 0.0))
        selected[k].append(j)
        admissible[k, j] = False
        S = selected[k]
        G = grams[k]
        GSS = G[np.ix_(S, S)]
        X = _solve_spd(GSS, G[S, :])
        beta = _solve_spd(GSS, b[k, S])
        num = b[k] - G[:, S] @ beta
        den = diag[k] - np.einsum("sj,sj->j", G[S, :], X)
        ok = admissible[k] & (den > thr)
        admissible[k] &= ok
        gains[k] = np.where(ok, num ** 2 / np.where(ok, den, 1.0), 0.0)
    return np.array(order, dtype=np.intp), np.array(path)


def _exact_blockwise(b, grams):
    """Best explained energy for every total support size, exactly.

    Enumerates all subsets inside each class-pair block (``2^L`` each) and
    combines blocks by a knapsack recursion, which is exact because the
    Gram matrix is block diagonal across class pairs.
    """
    M, L = b.shape
    subsets = [s for r in range(1, L + 1) for s in itertools.combinations(range(L), r)]
    block_best = []
    for k in range(M):
        best = np.full(L + 1, -np.inf)
        best[0] = 0.0
        arg = [()] * (L + 1)
        G = grams[k]
        thr = PINV_RTOL * max(float(np.max(np.diag(G))), 1e-300)
        for S in subsets:
            S = list(S)
            GSS = G[np.ix_(S, S)]
            val = float(b[k, S] @ _pinv_threshold(GSS, thr) @ b[k, S])
            if val > best[len(S)] + 1e-12 * max(1.0, abs(val)):
                best[len(S)] = val
                arg[len(S)] = tuple(S)
        block_best.append((best, arg))
    total = np.full(M * L + 1, -np.inf)
    total[0] = 0.0
    choice = [[] for _ in range(M * L + 1)]
    for k, (best, arg) in enumerate(block_best):
        new = np.full_like(total, -np.inf)
        new_choice = [None] * len(total)
        for t in range(len(total)):
            if not np.isfinite(total[t]):
                continue
            for r in range(L + 1):
                if t + r >= len(total) or not np.isfinite(best[r]):
                    continue
                v = total[t] + best[r]
                if v > new[t + r] + 1e-12 * max(1.0, abs(v)):
                    new[t + r] = v
                    new_choice[t + r] = choice[t] + [(k, arg[r])]
        total = new
        choice = new_choice
    return total, choice


def _coef_for_support(b, grams, support, M):
    L = b.shape[1]
    coef = np.zeros((M, L))
    support = np.asarray(support, dtype=np.intp)
    for k in range(M):
        js = np.sort(support[support % M == k] // M)
        if js.size:
            coef[k, js] = _solve_spd(grams[k][np.ix_(js, js)], b[k, js])
    return coef


def select_support_from_stats(T, s, H, sq_norm, pen_curve, method="auto"):
    """Minimize ``RSS(J) + pen(|J|)`` over supports ``J`` for one clustering.

    ``method`` is ``"exact-diagonal"`` (requires time-constant class-pair
    counts), ``"greedy"`` (forward selection), ``"exhaustive"`` (exact for
    any counts, ``L <= 12``) or ``"auto"`` (exact-diagonal when possible,
    greedy otherwise).
    """
    H = H.matrix if isinstance(H, TemporalBasis) else np.asarray(H)
    L, M = T.shape
    b = T.T @ H.T  # (M, L): Upsilon^T a
    diagonal = bool(np.all(s == s[0]))
    if method == "auto":
        method = "exact-diagonal" if diagonal else "greedy"
    if method == "exact-diagonal":
        if not diagonal:
            raise ValueError("exact-diagonal selection needs time-constant class counts")
        support, coef, rss = _select_diagonal(b, s[0], sq_norm, pen_curve)
        j = len(support)
        return SupportFit(support, coef, rss, float(pen_curve[j - 1]), method)

    grams = _block_grams(s, H)
    if method == "greedy":
        order, path = _greedy_path(b, grams)
        if order.size == 0:
            raise SingularDesignError("no admissible coefficient: design has no data")
        size, rss = _best_prefix(path, sq_norm, pen_curve)
        support = np.sort(order[:size])
    elif method == "exhaustive":
        if L > EXACT_BLOCK_MAX_L:
            raise ValueError(f"exhaustive support selection limited to L <= {EXACT_BLOCK_MAX_L}")
        explained, choice = _exact_blockwise(b, grams)
        j = np.arange(1, M * L + 1)
        obj = sq_norm - explained[1:] + pen_curve[:M * L]
        obj = np.where(np.isfinite(explained[1:]), obj, np.inf)
        size = int(np.argmin(obj)) + 1
        rss = float(sq_norm - explained[size])
        support = np.sort(np.array([k + jj * M for k, S in choice[size] for jj in S], dtype=np.intp))
        del j
    else:
        raise ValueError(f"unknown method {method!r}")
    coef = _coef_for_support(b, grams, support, M)
    return SupportFit(support, coef, rss, float(pen_curve[len(support) - 1]), method)


# ---------------------------------------------------------------------------
# explicit-matrix routes

def design_matrix(C, H, M=None):
    """``Upsilon = C W^T`` with ``W = H kron I_M``."""
    Hm = H.matrix if isinstance(H, TemporalBasis) else np.asarray(H, dtype=float)
    if M is None:
        M = C.shape[1] // Hm.shape[0]
    W = coefficient_operator(Hm, M)
    C = C.toarray() if sparse.issparse(C) else np.asarray(C, dtype=float)
    if C.shape[1] != W.shape[0]:
        raise DimensionMismatchError(f"C has {C.shape[1]} columns, W has {W.shape[0]}")
    return C @ W.T


def restricted_least_squares(a, C, H, J):
    """``d_hat = (U_J^T U_J)^{-1} U_J^T a`` embedded in a length-``ML`` vector."""
    a = np.asarray(a, dtype=float)
    J = np.asarray(sorted(set(int(j) for j in J)), dtype=np.intp)
    if J.size == 0:
        raise ValueError("support J must be nonempty")
    U = design_matrix(C, H)
    if a.shape[0] != U.shape[0]:
        raise DimensionMismatchError(f"a has length {a.shape[0]}, design has {U.shape[0]} rows")
    UJ = U[:, J]
    if np.any(np.all(UJ == 0, axis=0)):
        raise SingularDesignError("design column with no data (empty class pair)")
    d = np.zeros(U.shape[1])
    d[J] = _solve_spd(UJ.T @ UJ, UJ.T @ a)
    return d


def projection_matrix(C, H, J):
    """Orthogonal projection onto the column space of ``(C W^T)_J``."""
    U = design_matrix(C, H)[:, np.asarray(sorted(J), dtype=np.intp)]
    G = U.T @ U
    thr = PINV_RTOL * max(float(np.max(np.diag(G))), 1e-300)
    return U @ _pinv_threshold(G, thr) @ U.T


def select_support(a, C, H, penalty_spec, m, method="auto", factor=1.0):
    """Support selection for explicit ``a`` and block-diagonal ``C``.

    Returns ``(J, d_hat, objective)`` with ``d_hat`` of length ``ML``.
    """
    Hm = H.matrix if isinstance(H, TemporalBasis) else np.asarray(H, dtype=float)
    L = Hm.shape[0]
    M = n_class_pairs(m)
    a = np.asarray(a, dtype=float)
    Cm = C if sparse.issparse(C) else np.asarray(C, dtype=float)
    if Cm.shape != (a.size, M * L):
        raise DimensionMismatchError(f"C has shape {Cm.shape}, expected ({a.size}, {M * L})")
    T = np.asarray(Cm.T @ a).reshape(L, M)
    s = np.rint(np.asarray(Cm.sum(axis=0)).reshape(L, M)).astype(np.int64)
    pen = clusters.penalty_curve(penalty_spec, m, factor)
    fit = select_support_from_stats(T, s, Hm, float(a @ a), pen, method)
    return fit.support, fit.coef.reshape(-1, order="F"), fit.objective


# ---------------------------------------------------------------------------
# objectives over clusterings

class DSBMObjective:
    """Penalized objective of a membership sequence for fixed ``m``."""

    def __init__(self, Y, m, H, pen_curve, method="auto"):
        self.Y = Y
        self.m = m
        self.H = H.matrix if isinstance(H, TemporalBasis) else np.asarray(H)
        self.pen_curve = pen_curve
        self.method = method
        self.sq_norm = 0.5 * float(np.sum(Y * Y))

    def _method_for(self, s):
        if self.method != "auto" or np.all(s == s[0]):
            return self.method
        return "greedy"

    def fit(self, labels):
        T, s = block_stats(self.Y, labels, self.m)
        return select_support_from_stats(T, s, self.H, self.sq_norm, self.pen_curve,
                                         self._method_for(s))

    def __call__(self, labels):
        return self.fit(labels).objective


class _ExhaustiveDSBMObjective(DSBMObjective):
    def _method_for(self, s):
        if self.method != "auto" or np.all(s == s[0]):
            return self.method
        return "exhaustive" if self.H.shape[0] <= EXACT_BLOCK_MAX_L else "greedy"


# ---------------------------------------------------------------------------
# clustering search

def _labels_key(labels):
    return tuple(canonical_labels(labels).reshape(-1).tolist())


def _better(obj, labels, best_obj, best_labels):
    if best_labels is None:
        return True
    tol = TIE_RTOL * max(1.0, abs(best_obj))
    if obj < best_obj - tol:
        return True
    if obj > best_obj + tol:
        return False
    return _labels_key(labels) < _labels_key(best_labels)


def exhaustive_search(objective, family, m, limits=None):
    best_obj, best = math.inf, None
    for labels in enumerate_family(family, m, limits=limits):
        obj = objective(labels)
        if _better(obj, labels, best_obj, best):
            best_obj, best = obj, labels.copy()
    if best is None:
        raise InfeasibleFamilyError(f"family admits no membership sequence with m={m}")
    return best, best_obj


def _fill_empty(lab, m, rng):
    sizes = np.bincount(lab, minlength=m)
    for c in np.flatnonzero(sizes == 0):
        sizes = np.bincount(lab, minlength=m)
        donors = np.flatnonzero(lab == int(np.argmax(sizes)))
        lab[rng.choice(donors)] = c
    return lab


def spectral_labels(Y, m, rng):
    """k-means on the leading eigenvectors of the time-aggregated adjacency."""
    n = Y.shape[1]
    if m == 1:
        return np.zeros(n, dtype=np.intp)
    S = Y.sum(axis=0)
    w, V = np.linalg.eigh(S)
    idx = np.argsort(-np.abs(w), kind="stable")[:m]
    X = V[:, idx] * np.abs(w[idx])
    if not np.any(X):
        return _fill_empty(rng.integers(0, m, n), m, rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, lab = kmeans2(X, m, minit="++", seed=rng)
    return _fill_empty(lab.astype(np.intp), m, rng)


def _feasible(labels, m, family):
    sizes = np.stack([np.bincount(r, minlength=m) for r in labels])
    if np.any(sizes == 0) or not family.sizes_allowed(sizes, m):
        return False
    if labels.shape[0] > 1:
        sw = np.count_nonzero(labels[1:] != labels[:-1], axis=1)
        if np.any(sw > family.n0):
            return False
    return True


def _block_means(Y, labels, m):
    T, s = block_stats(Y, labels, m)
    P = np.where(s > 0, T / np.maximum(s, 1), 0.0)
    k1, k2 = class_pair_index(m)
    G = np.zeros((labels.shape[0], m, m))
    G[:, k1, k2] = P
    G[:, k2, k1] = P
    return G


def _lloyd_costs(Y, labels, m):
    """``cost[l, i, c]``: squared error of node ``i``'s row at slice ``l`` if it were in ``c``."""
    P = _block_means(Y, labels, m)
    Z = np.eye(m)[labels]
    K = Y @ Z  # (L, n, m)
    sizes = Z.sum(axis=1)  # (L, m)
    cnt = sizes[:, None, :] - Z  # excludes the node itself
    sq = np.sum(Y * Y, axis=2)[:, :, None]
    cross = np.einsum("lik,lck->lic", K, P)
    quad = np.einsum("lik,lck->lic", cnt, P * P)
    return sq - 2 * cross + quad


def _lloyd_step(Y, labels, m, family, rng):
    cost = _lloyd_costs(Y, labels, m)
    L, n = labels.shape
    if family.n0 == 0:
        new = np.argmin(cost.sum(axis=0), axis=1)
        new = _fill_empty(new.astype(np.intp), m, rng)
        if family.balanced:
            new = clusters.repair_sizes(new, m, family, rng)
        return np.tile(new, (L, 1))
    new = np.empty_like(labels)
    for l in range(L):
        prop = np.argmin(cost[l], axis=1)
        if l > 0:
            prev = new[l - 1]
            changed = np.flatnonzero(prop != prev)
            if changed.size > family.n0:
                gain = cost[l, changed, prev[changed]] - cost[l, changed, prop[changed]]
                keep = changed[np.argsort(-gain, kind="stable")[:family.n0]]
                prop2 = prev.copy()
                prop2[keep] = prop[keep]
                prop = prop2
        sizes = np.bincount(prop, minlength=m)
        if np.any(sizes == 0) or not family.sizes_allowed(sizes, m):
            prop = new[l - 1].copy() if l > 0 else labels[0].copy()
        new[l] = prop
    return new


def _local_search(objective, labels, m, family, rng, max_sweeps):
    labels = labels.copy()
    cur = objective(labels)
    L, n = labels.shape
    per_slice = family.n0 > 0 and L > 1
    for _ in range(max_sweeps):
        improved = False
        for i in rng.permutation(n):
            for c in range(m):
                if np.all(labels[:, i] == c):
                    continue
                cand = labels.copy()
                cand[:, i] = c
                if not _feasible(cand, m, family):
                    continue
                val = objective(cand)
                if val < cur - TIE_RTOL * max(1.0, abs(cur)):
                    labels, cur, improved = cand, val, True
            if per_slice:
                for l in range(L):
                    for c in range(m):
                        if labels[l, i] == c:
                            continue
                        cand = labels.copy()
                        cand[l, i] = c
                        if not _feasible(cand, m, family):
                            continue
                        val = objective(cand)
                        if val < cur - TIE_RTOL * max(1.0, abs(cur)):
                            labels, cur, improved = cand, val, True
        if not improved:
            break
    return labels, cur


def heuristic_search(Y, m, family, objective, rng, restarts=4, max_sweeps=50, lloyd_iters=10):
    """Spectral initialization, Lloyd refinement, then single-node moves.

    Restart 0 starts from spectral k-means; odd restarts from a random
    time-constant partition; other even restarts from spectral k-means with
    a fresh seed.  The best sequence over restarts is returned.
    """
    family.check_feasible(m)
    L, n = Y.shape[0], Y.shape[1]
    best_obj, best = math.inf, None
    for r in range(restarts):
        if r % 2 == 1:
            init = _fill_empty(rng.integers(0, m, n).astype(np.intp), m, rng)
        else:
            init = spectral_labels(Y, m, rng)
        if family.balanced:
            init = clusters.repair_sizes(init, m, family, rng)
        labels = np.tile(init, (L, 1))
        cur = objective(labels)
        for _ in range(lloyd_iters):
            prop = _lloyd_step(Y, labels, m, family, rng)
            if np.array_equal(prop, labels) or not _feasible(prop, m, family):
                break
            val = objective(prop)
            if val >= cur - TIE_RTOL * max(1.0, abs(cur)):
                break
            labels, cur = prop, val
        labels, cur = _local_search(objective, labels, m, family, rng, max_sweeps)
        labels = canonical_labels(labels)
        if _better(cur, labels, best_obj, best):
            best_obj, best = cur, labels
    return best, best_obj


def search_clustering(data, m, config, rng=None, penalty_factor=1.0):
    """Best membership sequence with ``m`` classes under ``config``'s objective."""
    Y = as_data_tensor(data)
    L, n = Y.shape[0], Y.shape[1]
    labels, _ = _search(Y, m, config, rng, penalty_factor)
    return MembershipSequence(labels, m)


def _search(Y, m, config, rng, penalty_factor):
    L, n = Y.shape[0], Y.shape[1]
    family = config.cluster_family(n, L)
    family.check_feasible(m)
    H = config.temporal_basis(L)
    pen = clusters.penalty_curve(config.penalty_spec(n, L), m, penalty_factor)
    if m == 1:
        labels = np.zeros((L, n), dtype=np.intp)
        objective = DSBMObjective(Y, m, H, pen, config.j_selection)
        return labels, objective(labels)
    if config.search == "exhaustive":
        objective = _ExhaustiveDSBMObjective(Y, m, H, pen, config.j_selection)
        return exhaustive_search(objective, family, m)
    rng = np.random.default_rng(config.seed) if rng is None else rng
    objective = DSBMObjective(Y, m, H, pen, config.j_selection)
    return heuristic_search(Y, m, family, objective, rng, config.restarts,
                            config.max_sweeps, config.lloyd_iters)


# ---------------------------------------------------------------------------
# fitting

def build_fit_result(Y, m, labels, support_fit, H, penalty_value, clamp, diagnostics=None):
    membership = MembershipSequence(labels, m)
    Q = support_fit.coef @ H.matrix
    lam_raw = expand_probability(membership, q_to_connectivity(Q, m))
    lam = np.clip(lam_raw, 0.0, 1.0) if clamp else lam_raw
    a = vectorize(Y.transpose(1, 2, 0))
    rss = float(np.sum((a - vectorize(lam_raw)) ** 2))
    return FitResult(
        m=m,
        support=np.asarray(support_fit.support, dtype=np.intp),
        coef=support_fit.coef,
        membership=membership,
        objective=rss + penalty_value,
        penalty_value=penalty_value,
        rss=rss,
        lam=lam,
        lam_raw=lam_raw,
        basis=H,
        diagnostics=dict(diagnostics or {}),
    )


def _choose(cands):
    """Minimum objective; ties (relative 1e-9) broken by m, |J|, labels."""
    best_obj = min(c["objective"] for c in cands)
    tol = TIE_RTOL * max(1.0, abs(best_obj))
    tied = [c for c in cands if c["objective"] <= best_obj + tol]
    return min(tied, key=lambda c: (c["m"], len(c["fit"].support), _labels_key(c["labels"])))


def fit(data, config=None, n=None, L=None, penalty_factor=None):
    """Fit the penalized least-squares DSBM estimator.

    ``data`` is an ``(n, n, L)`` adjacency (or real-valued) tensor, or the
    vectorized ``a`` of length ``N L`` together with ``n`` or ``L``.
    ``penalty_factor``, when given, maps ``m`` to a multiplier of the
    penalty.
    """
    config = EstimatorConfig() if config is None else config
    Y = as_data_tensor(data, n=n, L=L)
    L, n = Y.shape[0], Y.shape[1]
    H = config.temporal_basis(L)
    rng = np.random.default_rng(config.seed)
    cands, per_m = [], []
    for m in config.m_values(n):
        family = config.cluster_family(n, L)
        try:
            family.check_feasible(m)
        except InfeasibleFamilyError as exc:
            per_m.append({"m": m, "error": str(exc)})
            continue
        factor = 1.0 if penalty_factor is None else penalty_factor(m)
        labels, _ = _search(Y, m, config, rng, factor)
        pen = clusters.penalty_curve(config.penalty_spec(n, L), m, factor)
        method = config.j_selection
        if config.search == "exhaustive":
            obj_fn = _ExhaustiveDSBMObjective(Y, m, H, pen, method)
        else:
            obj_fn = DSBMObjective(Y, m, H, pen, method)
        sfit = obj_fn.fit(labels)
        cands.append({"m": m, "labels": labels, "fit": sfit, "objective": sfit.objective,
                      "factor": factor})
        per_m.append({"m": m, "objective": sfit.objective, "support_size": int(len(sfit.support)),
                      "rss": sfit.rss, "penalty": sfit.penalty})
    if not cands:
        raise InfeasibleFamilyError("no feasible number of classes in m_range")
    best = _choose(cands)
    res = build_fit_result(Y, best["m"], best["labels"], best["fit"], H, best["fit"].penalty,
                           config.clamp_output,
                           {"per_m": per_m, "selection_method": best["fit"].method,
                            "penalty_factor": best["factor"], "search": config.search})
    return res
