"""Clustering families, their log-cardinalities and the complexity penalty.

Natural logarithms are used throughout.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import InfeasibleFamilyError, InvalidMembershipError

FREE = "free"
BALANCED = "balanced"


@dataclass(frozen=True)
class ClusterFamily:
    """Membership sequences on ``n`` nodes and ``L`` slices with at most ``n0``
    switches between consecutive slices; ``balanced`` additionally bounds
    every class size by ``aleph1 n/m <= n_k <= aleph2 n/m``."""

    n: int
    L: int
    n0: int = 0
    kind: str = FREE
    aleph1: float = 0.5
    aleph2: float = 2.0

    def __post_init__(self):
        if self.n < 1 or self.L < 1:
            raise ValueError("n and L must be positive")
        if not 0 <= self.n0 <= self.n:
            raise ValueError(f"n0 must lie in [0, n], got {self.n0}")
        if self.kind not in (FREE, BALANCED):
            raise ValueError(f"unknown family kind {self.kind!r}")
        if not (0 < self.aleph1 <= 1 <= self.aleph2):
            raise ValueError("need 0 < aleph1 <= 1 <= aleph2")

    @property
    def balanced(self):
        return self.kind == BALANCED

    def size_bounds(self, m):
        """Inclusive integer bounds on class sizes for ``m`` classes."""
        if self.balanced:
            lo = max(1, math.ceil(self.aleph1 * self.n / m - 1e-9))
            hi = min(self.n, math.floor(self.aleph2 * self.n / m + 1e-9))
        else:
            lo, hi = 1, self.n
        return lo, hi

    def check_feasible(self, m):
        lo, hi = self.size_bounds(m)
        if m < 1 or m > self.n or lo > hi or m * lo > self.n or m * hi < self.n:
            raise InfeasibleFamilyError(
                f"no membership with m={m} classes satisfies the family constraints "
                f"(n={self.n}, size bounds [{lo}, {hi}])")

    def sizes_allowed(self, sizes, m):
        lo, hi = self.size_bounds(m)
        sizes = np.asarray(sizes)
        return bool(np.all(sizes >= lo) and np.all(sizes <= hi))

    def membership_allowed(self, z):
        """Whether a :class:`MembershipSequence` (or label array) belongs to the family."""
        labels = getattr(z, "labels", None)
        if labels is None:
            labels = np.atleast_2d(np.asarray(z))
            m = int(labels.max()) + 1
        else:
            m = z.m
        if labels.shape != (self.L, self.n):
            return False
        switches = np.count_nonzero(labels[1:] != labels[:-1], axis=1)
        if np.any(switches > self.n0):
            return False
        sizes = np.stack([np.bincount(r, minlength=m) for r in labels])
        if np.any(sizes == 0):
            return False
        return self.sizes_allowed(sizes, m)


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty ``scale * [c1 * complexity(m) + c2 * j * log(c3 m^2 L / j)]``.

    ``clustering_term="bound"`` uses ``n log m + n0 (L-1) log(m n e / n0)``;
    ``"exact"`` uses the log-cardinality of the family.
    """

    family: ClusterFamily
    c1: float = 11.0
    c2: float = 5.5
    c3: float = 25.0
    scale: float = 1.0
    clustering_term: str = "bound"

    def __post_init__(self):
        if min(self.c1, self.c2, self.c3, self.scale) <= 0:
            raise ValueError("penalty constants must be positive")
        if self.clustering_term not in ("bound", "exact"):
            raise ValueError("clustering_term must be 'bound' or 'exact'")


def _check_m(m):
    if m < 1:
        raise ValueError("m must be at least 1")


def log_binom(n, k):
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def log_cardinality(family, m):
    """``log( m^n [C(n, n0) m^n0]^(L-1) )``."""
    _check_m(m)
    n, n0, L = family.n, family.n0, family.L
    base = n * math.log(m)
    if n0 == 0:
        return base
    return base + (L - 1) * (log_binom(n, n0) + n0 * math.log(m))


def switching_log_bound(n, n0, m):
    """``n0 log(m n e / n0)``, zero when ``n0 = 0``."""
    if n0 == 0:
        return 0.0
    return n0 * math.log(m * n * math.e / n0)


def clustering_complexity(family, m, term="bound"):
    _check_m(m)
    if term == "exact":
        return log_cardinality(family, m)
    return family.n * math.log(m) + (family.L - 1) * switching_log_bound(family.n, family.n0, m)


def balanced_log_cardinality_lower_bound(family, m):
    """Lower bound ``(1/4)[n log m + (L-1) n0 log(m n e / n0)]``.

    Returns ``(value, hypothesis_ok)`` where ``hypothesis_ok`` reports
    whether ``n >= sqrt(e n0^3)`` holds.
    """
    _check_m(m)
    n, n0, L = family.n, family.n0, family.L
    ok = n >= math.sqrt(math.e * n0 ** 3)
    value = 0.25 * (n * math.log(m) + (L - 1) * switching_log_bound(n, n0, m))
    return value, ok


def max_support(m, L):
    return m * (m + 1) * L // 2


def penalty(spec, j, m, factor=1.0):
    """Penalty for a support of size ``j`` with ``m`` classes."""
    _check_m(m)
    L = spec.family.L
    if not 1 <= j <= max_support(m, L):
        raise ValueError(f"support size {j} outside [1, {max_support(m, L)}]")
    clust = clustering_complexity(spec.family, m, spec.clustering_term)
    coef = j * math.log(spec.c3 * m * m * L / j)
    return factor * spec.scale * (spec.c1 * clust + spec.c2 * coef)


def penalty_curve(spec, m, factor=1.0):
    """Vector of ``penalty(spec, j, m)`` for ``j = 1..m(m+1)L/2``."""
    _check_m(m)
    L = spec.family.L
    j = np.arange(1, max_support(m, L) + 1, dtype=float)
    clust = clustering_complexity(spec.family, m, spec.clustering_term)
    return factor * spec.scale * (spec.c1 * clust + spec.c2 * j * np.log(spec.c3 * m * m * L / j))


def sparse_rate(rho_n, m, n):
    """``r_n(m) = max(rho_n, m^2 / n^2)``."""
    if not 0 < rho_n <= 1:
        raise ValueError("rho_n must lie in (0, 1]")
    return max(rho_n, (m * m) / (n * n))


def repair_sizes(labels, m, family, rng=None):
    """Move nodes between classes until every class is nonempty and within bounds.

    Works on a 1-d label vector in place and returns it.
    """
    family.check_feasible(m)
    lo, hi = family.size_bounds(m)
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise InvalidMembershipError("repair_sizes expects a single label vector")
    rng = np.random.default_rng(0) if rng is None else rng
    for _ in range(4 * family.n + 4):
        sizes = np.bincount(labels, minlength=m)
        big = int(np.argmax(sizes))
        small = int(np.argmin(sizes))
        if sizes[big] > hi:
            dst = small
            src = big
        elif sizes[small] < lo:
            src, dst = big, small
        else:
            return labels
        members = np.flatnonzero(labels == src)
        labels[rng.choice(members)] = dst
    raise InfeasibleFamilyError("could not repair class sizes")
