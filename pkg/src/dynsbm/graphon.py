"""Dynamic graphons: specification, sampling and truncated-transform estimation."""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .clusters import ClusterFamily
from .core import MembershipSequence, n_class_pairs
from .enumeration import enumerate_family
from .errors import InvalidSpecError
from .estimator import (
    FitResult,
    SupportFit,
    TIE_RTOL,
    _labels_key,
    as_data_tensor,
    block_stats,
    build_fit_result,
    exhaustive_search,
    heuristic_search,
)
from .transform import TemporalBasis, get_basis


# ---------------------------------------------------------------------------
# closed-form graphons

def _sum_drift(x, y, t):
    return (x + y) / 4 + t / 4


def _smooth_wave(x, y, t):
    return 0.5 + 0.2 * np.cos(np.pi * (x - y)) * np.sin(2 * np.pi * t) + 0.1 * (x + y - 1) * t


def _product(x, y, t):
    return 0.1 + 0.8 * x * y * (0.5 + 0.5 * t)


def _two_block_wave(x, y, t):
    same = (x <= 0.5) == (y <= 0.5)
    return np.where(same, 0.6 + 0.25 * np.sin(2 * np.pi * t), 0.3 - 0.15 * np.cos(2 * np.pi * t))


SMOOTH_GRAPHONS = {
    "sum_drift": _sum_drift,
    "smooth_wave": _smooth_wave,
    "product": _product,
    "two_block_wave": _two_block_wave,
}


@dataclass(frozen=True)
class GraphonSpec:
    """A graphon ``f(x, y, t)`` on ``[0,1]^3``.

    ``kind="piecewise_constant"``: blocks cut at ``breakpoints`` with block
    value ``levels[a, b] + amplitude[a, b] * sin(2 pi frequency t)``.
    ``kind="smooth"``: a named closed form from ``SMOOTH_GRAPHONS``, optionally
    with breakpoints for bookkeeping.  Smoothness constants are stored in
    ``meta`` and never used in computation.
    """

    kind: str
    breakpoints: tuple = (0.0, 1.0)
    levels: tuple = ((0.5,),)
    amplitude: tuple = None
    frequency: float = 1.0
    name: str = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("piecewise_constant", "smooth"):
            raise InvalidSpecError(f"unknown graphon kind {self.kind!r}")
        beta = np.asarray(self.breakpoints, dtype=float)
        if beta.ndim != 1 or beta.size < 2 or beta[0] != 0.0 or beta[-1] != 1.0 \
                or np.any(np.diff(beta) <= 0):
            raise InvalidSpecError("breakpoints must increase strictly from 0 to 1")
        if self.kind == "piecewise_constant":
            r = beta.size - 1
            lev = np.asarray(self.levels, dtype=float)
            if lev.shape != (r, r) or np.any(lev != lev.T):
                raise InvalidSpecError(f"levels must be a symmetric {r}x{r} matrix")
            if self.amplitude is not None:
                amp = np.asarray(self.amplitude, dtype=float)
                if amp.shape != (r, r) or np.any(amp != amp.T):
                    raise InvalidSpecError(f"amplitude must be a symmetric {r}x{r} matrix")
                if np.any(lev - np.abs(amp) < 0) or np.any(lev + np.abs(amp) > 1):
                    raise InvalidSpecError("levels +- amplitude must stay in [0, 1]")
            elif np.any((lev < 0) | (lev > 1)):
                raise InvalidSpecError("levels must lie in [0, 1]")
        elif self.name not in SMOOTH_GRAPHONS:
            raise InvalidSpecError(
                f"unknown smooth graphon {self.name!r}; choose from {sorted(SMOOTH_GRAPHONS)}")

    @property
    def r(self):
        return len(self.breakpoints) - 1

    def block_of(self, x):
        """Block index of positions ``x``; blocks are ``(beta_{j-1}, beta_j]``."""
        beta = np.asarray(self.breakpoints, dtype=float)
        return np.clip(np.searchsorted(beta, x, side="left") - 1, 0, self.r - 1)

    def __call__(self, x, y, t):
        x, y, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float),
                                      np.asarray(t, float))
        if self.kind == "smooth":
            return np.asarray(SMOOTH_GRAPHONS[self.name](x, y, t), dtype=float)
        a, b = self.block_of(x), self.block_of(y)
        val = np.asarray(self.levels, dtype=float)[a, b]
        if self.amplitude is not None:
            amp = np.asarray(self.amplitude, dtype=float)[a, b]
            val = val + amp * np.sin(2 * np.pi * self.frequency * t)
        return val

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind", None)
        if kind == "piecewise-constant":
            kind = "piecewise_constant"
        known = {"breakpoints", "levels", "amplitude", "frequency", "name", "meta"}
        extra = set(d) - known
        if extra:
            raise InvalidSpecError(f"unknown graphon spec fields {sorted(extra)}")
        for key in ("breakpoints",):
            if key in d:
                d[key] = tuple(d[key])
        for key in ("levels", "amplitude"):
            if d.get(key) is not None:
                d[key] = tuple(tuple(row) for row in d[key])
        return cls(kind=kind, **d)

    def to_dict(self):
        out = {"kind": self.kind, "breakpoints": list(self.breakpoints)}
        if self.kind == "piecewise_constant":
            out["levels"] = [list(r) for r in self.levels]
            if self.amplitude is not None:
                out["amplitude"] = [list(r) for r in self.amplitude]
                out["frequency"] = self.frequency
        else:
            out["name"] = self.name
        if self.meta:
            out["meta"] = self.meta
        return out


def load_graphon_spec(path):
    with open(path) as fh:
        return GraphonSpec.from_dict(json.load(fh))


def constant_graphon(c):
    return GraphonSpec("piecewise_constant", levels=((float(c),),))


def graphon_tensor(spec, zeta, L):
    """``Lam[i, j, l] = f(zeta_i, zeta_j, l / L)`` with zero diagonal."""
    zeta = np.asarray(zeta, dtype=float)
    t = np.arange(1, L + 1) / L
    lam = spec(zeta[:, None, None], zeta[None, :, None], t[None, None, :])
    lam = np.array(np.broadcast_to(lam, (zeta.size, zeta.size, L)), dtype=float)
    if np.any(lam < -1e-12) or np.any(lam > 1 + 1e-12):
        raise InvalidSpecError("graphon takes values outside [0, 1]")
    if np.max(np.abs(lam - lam.transpose(1, 0, 2)), initial=0.0) > 1e-12:
        raise InvalidSpecError("graphon is not symmetric in (x, y)")
    lam = np.clip(0.5 * (lam + lam.transpose(1, 0, 2)), 0.0, 1.0)
    idx = np.arange(zeta.size)
    lam[idx, idx, :] = 0.0
    return lam


def sample_graphon(spec, n, L, zeta="uniform", seed=0):
    """Probability tensor and latent positions; ``zeta`` is ``"uniform"`` or ``"grid"``."""
    if zeta in ("uniform", "iid-uniform"):
        z = np.random.default_rng(seed).random(n)
    elif zeta in ("grid", "fixed-grid"):
        z = np.arange(1, n + 1) / n
    else:
        raise InvalidSpecError(f"unknown zeta distribution {zeta!r}")
    return graphon_tensor(spec, z, L), z


# ---------------------------------------------------------------------------
# estimation

@dataclass
class GraphonFitConfig:
    m_max: int = 3
    m_min: int = 1
    basis: object = "dct"
    truncations: tuple = None
    search: str = "heuristic"
    restarts: int = 4
    seed: int = 0
    c1: float = 11.0
    c2: float = 5.5
    c3: float = 25.0
    penalty_scale: float = 1.0
    clamp_output: bool = True
    max_sweeps: int = 50
    lloyd_iters: int = 10

    def __post_init__(self):
        if self.m_min < 1 or self.m_max < self.m_min:
            raise ValueError("need 1 <= m_min <= m_max")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.search not in ("heuristic", "exhaustive"):
            raise ValueError(f"unknown search mode {self.search!r}")
        if self.truncations is not None and len(self.truncations) == 0:
            raise ValueError("truncation grid must be nonempty")

    def temporal_basis(self, L):
        if isinstance(self.basis, TemporalBasis):
            return self.basis
        return get_basis(self.basis, L)

    def grid(self, L):
        if self.truncations is None:
            return np.arange(1, L + 1)
        g = np.unique(np.asarray(self.truncations, dtype=int))
        if g.min() < 1 or g.max() > L:
            raise ValueError(f"truncation lengths must lie in 1..{L}")
        return g


@dataclass
class GraphonFitResult(FitResult):
    L1: int = 1


def graphon_penalty(n, m, L, L1, config):
    return config.penalty_scale * (config.c1 * n * math.log(m)
                                   + config.c2 * m * m * L1 * math.log(config.c3 * L / L1))


class GraphonObjective:
    """Objective of a time-constant clustering, minimized over the truncation ``L1``."""

    def __init__(self, Y, m, H, grid, config):
        self.Y = Y
        self.m = m
        self.H = H.matrix if isinstance(H, TemporalBasis) else np.asarray(H)
        self.grid = grid
        n, L = Y.shape[1], Y.shape[0]
        self.pens = np.array([graphon_penalty(n, m, L, int(L1), config) for L1 in grid])
        self.sq_norm = 0.5 * float(np.sum(Y * Y))

    def evaluate(self, labels):
        """Return ``(objective, L1, rss, coef)`` for the best truncation."""
        T, s = block_stats(self.Y, labels, self.m)
        b = T.T @ self.H.T  # (M, L): block sums of X = Y H^T
        s0 = s[0].astype(float)
        safe = np.where(s0 > 0, s0, 1.0)
        energy = np.where(s0[:, None] > 0, b * b / safe[:, None], 0.0).sum(axis=0)
        rss_all = self.sq_norm - np.cumsum(energy)
        rss = rss_all[self.grid - 1]
        obj = rss + self.pens
        i = int(np.argmin(obj))
        L1 = int(self.grid[i])
        coef = np.zeros_like(b)
        coef[:, :L1] = np.where(s0[:, None] > 0, b[:, :L1] / safe[:, None], 0.0)
        return float(obj[i]), L1, float(rss[i]), coef

    def __call__(self, labels):
        return self.evaluate(labels)[0]


def fit_graphon(data, config=None):
    """Fit a time-constant clustering and a rectangular truncated support.

    The data are transformed as ``X = A H^T`` pair by pair; for each ``m``
    and truncation ``L1`` the first ``L1`` transform columns are fitted by
    block means.  The reported objective uses the full residual
    ``||X - Z [V, 0]||^2``, i.e. the discarded columns count as residual.
    """
    config = GraphonFitConfig() if config is None else config
    Y = as_data_tensor(data)
    L, n = Y.shape[0], Y.shape[1]
    H = config.temporal_basis(L)
    grid = config.grid(L)
    family = ClusterFamily(n=n, L=L, n0=0)
    rng = np.random.default_rng(config.seed)
    best, per_m = None, []
    for m in range(config.m_min, min(config.m_max, n) + 1):
        objective = GraphonObjective(Y, m, H, grid, config)
        if m == 1:
            labels = np.zeros((L, n), dtype=np.intp)
        elif config.search == "exhaustive":
            labels, _ = exhaustive_search(objective, family, m)
        else:
            labels, _ = heuristic_search(Y, m, family, objective, rng, config.restarts,
                                         config.max_sweeps, config.lloyd_iters)
        obj, L1, rss, coef = objective.evaluate(labels)
        per_m.append({"m": m, "objective": obj, "L1": L1, "rss": rss})
        key = (obj, m, L1, _labels_key(labels))
        if best is None or _better_key(key, best[0]):
            best = (key, labels, L1, coef, objective.pens[list(grid).index(L1)])
    (_, m, L1, _), labels, L1, coef, pen = best
    M = n_class_pairs(m)
    support = np.array([k + j * M for j in range(L1) for k in range(M)], dtype=np.intp)
    sfit = SupportFit(np.sort(support), coef, 0.0, float(pen), "graphon")
    base = build_fit_result(Y, m, labels, sfit, H, float(pen), config.clamp_output,
                            {"per_m": per_m, "L1": L1, "search": config.search})
    trunc = float(np.sum((_transform(Y, H)[:, :L1] - _fitted_coef(labels, coef, m)[:, :L1]) ** 2))
    base.diagnostics["truncated_rss"] = trunc
    return GraphonFitResult(**{f: getattr(base, f) for f in base.__dataclass_fields__}, L1=L1)


def _better_key(a, b):
    tol = TIE_RTOL * max(1.0, abs(b[0]))
    if a[0] < b[0] - tol:
        return True
    if a[0] > b[0] + tol:
        return False
    return a[1:] < b[1:]


def _transform(Y, H):
    """``X = A H^T`` as an ``N x L`` matrix."""
    from .core import pair_index
    i, j = pair_index(Y.shape[1])
    return Y[:, i, j].T @ H.matrix.T


def _fitted_coef(labels, coef, m):
    from .core import pair_class_labels
    cls = pair_class_labels(MembershipSequence(labels, m))[0]
    return coef[cls]
