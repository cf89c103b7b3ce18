"""Ground-truth DSBM generators with controlled coefficient decay."""

from dataclasses import dataclass

import numpy as np
from scipy.special import zeta as riemann_zeta

from .clusters import BALANCED, ClusterFamily, repair_sizes
from .core import (
    MembershipSequence,
    class_pair_index,
    expand_probability,
    n_class_pairs,
    q_to_connectivity,
    theta_from_q,
)
from .transform import TemporalBasis, from_coefficients, get_basis


@dataclass
class DSBMTruth:
    membership: MembershipSequence
    D: np.ndarray
    basis: TemporalBasis
    lam: np.ndarray

    @property
    def m(self):
        return self.membership.m

    @property
    def Q(self):
        return from_coefficients(self.D, self.basis)

    @property
    def theta(self):
        return theta_from_q(self.membership, self.Q)


def balanced_membership(family, m, rng):
    """Random balanced sequence with at most ``n0`` switches per step."""
    family.check_feasible(m)
    n, L = family.n, family.L
    lab = rng.permutation(np.arange(n) % m).astype(np.intp)
    if family.balanced:
        lab = repair_sizes(lab, m, family, rng)
    rows = [lab]
    for _ in range(1, L):
        cur = rows[-1].copy()
        if family.n0 > 0:
            k = int(rng.integers(0, family.n0 + 1))
            movers = rng.choice(n, size=k, replace=False)
            prop = cur.copy()
            prop[movers] = rng.integers(0, m, size=k)
            sizes = np.bincount(prop, minlength=m)
            if np.all(sizes > 0) and family.sizes_allowed(sizes, m):
                cur = prop
        rows.append(cur)
    return MembershipSequence(np.array(rows), m)


def a0_coefficients(m, L, basis, within=0.7, between=0.3, nu0=1.0, K0=0.05, epsilon=0.05,
                    rng=None, time_constant=False, bounds=(0.1, 0.9)):
    """Coefficient matrix ``D`` whose rows satisfy the weighted decay condition.

    Row ``k`` has first entry ``sqrt(L) * level_k`` and tail entries
    ``+- sqrt(K0 / zeta(1 + 2 eps)) * (l-1)^-(nu0 + 1/2 + eps)`` with random
    signs, so ``sum_l (l-1)^(2 nu0) D[k, l]^2 <= K0``.  ``Q = D H`` is
    shrunk affinely toward the middle of ``bounds`` (shrinking only reduces
    the weighted sum) whenever it leaves that interval.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    H = basis.matrix if isinstance(basis, TemporalBasis) else np.asarray(basis)
    M = n_class_pairs(m)
    k1, k2 = class_pair_index(m)
    level = np.where(k1 == k2, within, between).astype(float)
    D = np.zeros((M, L))
    D[:, 0] = np.sqrt(L) * level
    if not time_constant and L > 1:
        j = np.arange(1, L, dtype=float)
        amp = np.sqrt(K0 / riemann_zeta(1 + 2 * epsilon)) * j ** (-(nu0 + 0.5 + epsilon))
        D[:, 1:] = amp * rng.choice([-1.0, 1.0], size=(M, L - 1))
    Q = D @ H
    lo, hi = float(Q.min()), float(Q.max())
    b_lo, b_hi = bounds
    mid, half = 0.5 * (b_lo + b_hi), 0.5 * (b_hi - b_lo)
    if lo < b_lo or hi > b_hi:
        c = min(1.0, half / max(mid - lo, hi - mid))
        center = np.zeros_like(D)
        center[:, 0] = mid * np.sqrt(L)
        D = center + c * (D - center)
    return D


def a0_weighted_norms(D, nu0):
    """``sum_l (l-1)^(2 nu0) D[k, l]^2`` for every row ``k``."""
    L = D.shape[1]
    w = np.arange(L, dtype=float) ** (2 * nu0)
    return (D * D) @ w


def generate_dsbm(n, L, m, n0=0, family=BALANCED, aleph1=0.5, aleph2=2.0, within=0.7,
                  between=0.3, nu0=1.0, K0=0.05, epsilon=0.05, basis="dct", seed=0,
                  time_constant=False, bounds=(0.1, 0.9)):
    """Draw a ground-truth DSBM: memberships, coefficients and ``Lambda``."""
    rng = np.random.default_rng(seed)
    fam = ClusterFamily(n=n, L=L, n0=n0, kind=family, aleph1=aleph1, aleph2=aleph2)
    H = basis if isinstance(basis, TemporalBasis) else get_basis(basis, L)
    z = balanced_membership(fam, m, rng)
    D = a0_coefficients(m, L, H, within, between, nu0, K0, epsilon, rng, time_constant, bounds)
    lam = expand_probability(z, q_to_connectivity(from_coefficients(D, H), m))
    return DSBMTruth(membership=z, D=D, basis=H, lam=np.clip(lam, 0.0, 1.0))


def constant_truth(n, L, c, basis="dct"):
    """``Lambda = c`` off the diagonal, as a one-class DSBM."""
    H = basis if isinstance(basis, TemporalBasis) else get_basis(basis, L)
    z = MembershipSequence(np.zeros((L, n), dtype=np.intp), 1)
    D = np.zeros((1, L))
    D[0, 0] = c * np.sqrt(L)
    lam = expand_probability(z, q_to_connectivity(from_coefficients(D, H), 1))
    return DSBMTruth(membership=z, D=D, basis=H, lam=np.clip(lam, 0.0, 1.0))
