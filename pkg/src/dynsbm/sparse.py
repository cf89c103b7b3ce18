"""Uniformly sparse networks: rescaled penalty and a projection diagnostic."""

from dataclasses import dataclass, field

import numpy as np

from .clusters import BALANCED, ClusterFamily, repair_sizes, sparse_rate
from .core import MembershipSequence, build_full_clustering_matrix, n_class_pairs, n_pairs
from .errors import InfeasibleFamilyError
from .estimator import EstimatorConfig, as_data_tensor, design_matrix, fit
from .transform import TemporalBasis, get_basis


@dataclass
class SparseConfig:
    rho_n: float = 1.0
    lambda0: float = 1.0
    base: EstimatorConfig = field(default_factory=lambda: EstimatorConfig(family=BALANCED))

    def __post_init__(self):
        if not 0 < self.rho_n <= 1:
            raise ValueError("rho_n must lie in (0, 1]")
        if self.lambda0 <= 0:
            raise ValueError("lambda0 must be positive")
        if self.base.family != BALANCED:
            raise InfeasibleFamilyError("the sparse estimator requires the balanced family")

    def factor(self, m, n):
        return self.lambda0 * sparse_rate(self.rho_n, m, n)


def fit_sparse(data, config=None, n=None, L=None):
    """Estimator fit with penalty multiplied by ``lambda0 * max(rho_n, m^2/n^2)``."""
    config = SparseConfig() if config is None else config
    Y = as_data_tensor(data, n=n, L=L)
    nn = Y.shape[1]
    res = fit(Y.transpose(1, 2, 0), config.base, penalty_factor=lambda m: config.factor(m, nn))
    res.diagnostics.update({"rho_n": config.rho_n, "lambda0": config.lambda0})
    return res


def _random_balanced_labels(family, m, rng):
    lab = rng.permutation(np.arange(family.n) % m).astype(np.intp)
    return repair_sizes(lab, m, family, rng)


def a1_ratio(theta, U, J):
    """``||(I - P_J) theta||_inf / ||theta||_inf`` for the design columns ``J``."""
    UJ = U[:, np.asarray(J, dtype=np.intp)]
    coef, *_ = np.linalg.lstsq(UJ, theta, rcond=None)
    resid = theta - UJ @ coef
    top = float(np.max(np.abs(theta)))
    return 0.0 if top == 0 else float(np.max(np.abs(resid)) / top)


def check_a1_diagnostic(H, family, m=2, trials=1000, seed=0, L1=None):
    """Monte-Carlo sup of the sup-norm projection residual ratio.

    Draws a random balanced time-constant clustering, a rectangular support
    made of the first ``L1`` transform columns (random ``L1`` when not
    given) and ``theta`` uniform on ``[0, 1]``; returns the largest ratio
    seen.  This is an empirical estimate of the constant, not a proof.
    """
    if not isinstance(H, TemporalBasis):
        H = get_basis(H, family.L) if isinstance(H, str) else TemporalBasis(np.asarray(H))
    family.check_feasible(m)
    rng = np.random.default_rng(seed)
    L = family.L
    M = n_class_pairs(m)
    N = n_pairs(family.n)
    worst = 0.0
    for _ in range(trials):
        lab = _random_balanced_labels(family, m, rng)
        z = MembershipSequence(np.tile(lab, (L, 1)), m)
        C = build_full_clustering_matrix(z, dense=True)
        U = design_matrix(C, H, M)
        ell = int(rng.integers(1, L + 1)) if L1 is None else int(L1)
        J = [k + j * M for j in range(ell) for k in range(M)]
        theta = rng.random(N * L)
        worst = max(worst, a1_ratio(theta, U, J))
    return worst
