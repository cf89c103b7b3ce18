"""Monte-Carlo experiments: risk, oracle-inequality coverage and rate sweeps."""

import csv
import io as _io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from . import clusters
from .core import class_pair_index, derive_seed, sample_adjacency, theta_from_q
from .estimator import EstimatorConfig, fit
from .generators import DSBMTruth, constant_truth, generate_dsbm
from .graphon import GraphonFitConfig, GraphonSpec, fit_graphon, graphon_tensor
from .transform import from_coefficients

SCHEMA_VERSION = 1
CSV_VERSION = "dynsbm-results-v1"


# ---------------------------------------------------------------------------
# configuration

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DSBMGeneratorConfig(_Strict):
    type: Literal["dsbm"] = "dsbm"
    n: int = Field(24, ge=2)
    L: int = Field(8, ge=1)
    m: int = Field(2, ge=1)
    n0: int = Field(0, ge=0)
    family: Literal["free", "balanced"] = "balanced"
    aleph1: float = 0.5
    aleph2: float = 2.0
    within: float = Field(0.7, ge=0, le=1)
    between: float = Field(0.3, ge=0, le=1)
    nu0: float = Field(1.0, ge=0)
    K0: float = Field(0.05, ge=0)
    epsilon: float = Field(0.05, gt=0)
    basis: str = "dct"
    time_constant: bool = False
    bounds: Tuple[float, float] = (0.1, 0.9)


class ConstantGeneratorConfig(_Strict):
    type: Literal["constant"] = "constant"
    n: int = Field(24, ge=2)
    L: int = Field(8, ge=1)
    value: float = Field(0.3, ge=0, le=1)


class GraphonGeneratorConfig(_Strict):
    type: Literal["graphon"] = "graphon"
    n: int = Field(24, ge=2)
    L: int = Field(8, ge=1)
    spec: dict
    zeta: Literal["uniform", "grid"] = "uniform"

    @field_validator("spec")
    @classmethod
    def _valid_spec(cls, v):
        GraphonSpec.from_dict(v)
        return v


class EstimatorSettings(_Strict):
    m_max: int = Field(3, ge=1)
    m_min: int = Field(1, ge=1)
    n0: Optional[int] = None
    family: Literal["free", "balanced"] = "free"
    basis: str = "dct"
    penalty_scale: float = Field(1.0, gt=0)
    clustering_term: Literal["bound", "exact"] = "bound"
    search: Literal["heuristic", "exhaustive"] = "heuristic"
    restarts: int = Field(4, ge=1)
    j_selection: Literal["auto", "exact-diagonal", "greedy", "exhaustive"] = "auto"


class ExperimentConfig(_Strict):
    schema_version: Literal[1] = 1
    name: str = "experiment"
    generator: Union[DSBMGeneratorConfig, ConstantGeneratorConfig, GraphonGeneratorConfig] = \
        Field(discriminator="type")
    estimator: EstimatorSettings = EstimatorSettings()
    replicates: int = Field(20, ge=1)
    seed: int = Field(0, ge=0)
    t_values: List[float] = [3.0]
    noiseless: bool = False
    workers: int = Field(1, ge=1)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.model_validate(json.load(fh))


def estimator_config(settings, n0_default, seed):
    n0 = n0_default if settings.n0 is None else settings.n0
    return EstimatorConfig(
        m_max=settings.m_max, m_min=settings.m_min, n0=n0, family=settings.family,
        basis=settings.basis, penalty_scale=settings.penalty_scale,
        clustering_term=settings.clustering_term, search=settings.search,
        restarts=settings.restarts, j_selection=settings.j_selection, seed=seed)


# ---------------------------------------------------------------------------
# bounds

@dataclass
class BoundComponents:
    t: float
    bias_at_truth: float
    penalty_at_truth: float
    bound_at_truth: float
    bound: float
    best_support_size: int
    satisfied: bool


def oracle_inequality_check(mse, truth, t, penalty_spec):
    """Right side of the oracle inequality at feasible points of the true model.

    ``bound_at_truth`` uses the full support of the true coefficients.  The
    reported ``bound`` is the smallest value over nested truncations of the
    true coefficients (ordered by their energy), each of which is a feasible
    choice of ``(m, J, d, C)``; the flag compares ``mse`` against it.
    """
    z, D, H = truth.membership, truth.D, truth.basis
    n, L, m = z.n, z.L, z.m
    M = D.shape[0]
    scale = n * n * L
    theta_star = truth.theta
    flat = D.reshape(-1, order="F")
    counts = np.mean([np.bincount(r, minlength=m) for r in z.labels], axis=0)
    k1, k2 = class_pair_index(m)
    weight = np.where(k1 == k2, counts[k1] * (counts[k1] - 1) / 2, counts[k1] * counts[k2])
    energy = flat ** 2 * np.tile(weight, L)
    nz = np.flatnonzero(flat != 0)
    if nz.size == 0:
        nz = np.array([0])
    order = nz[np.argsort(-energy[nz], kind="stable")]
    pens = clusters.penalty_curve(penalty_spec, m)
    best, best_j = math.inf, 0
    at_truth = None
    for j in range(1, order.size + 1):
        keep = np.zeros(flat.size)
        keep[order[:j]] = flat[order[:j]]
        Dj = keep.reshape(M, L, order="F")
        bias = float(np.sum((theta_from_q(z, from_coefficients(Dj, H)) - theta_star) ** 2))
        val = (6 * bias + 4 * pens[j - 1] + 38 * t) / scale
        if val < best:
            best, best_j = val, j
        if j == order.size:
            at_truth = (bias, float(pens[j - 1]), val)
    return BoundComponents(t=float(t), bias_at_truth=at_truth[0], penalty_at_truth=at_truth[1],
                           bound_at_truth=float(at_truth[2]), bound=float(best), best_support_size=int(best_j),
                           satisfied=bool(mse <= best))


# ---------------------------------------------------------------------------
# experiments

@dataclass
class ResultRecord:
    replicate: int
    seed: int
    status: str = "ok"
    mse: float = math.nan
    objective: float = math.nan
    m_hat: int = -1
    support_size: int = -1
    bounds: list = field(default_factory=list)
    wall_time: float = 0.0

    def row(self, t_values):
        out = {
            "replicate": self.replicate,
            "seed": self.seed,
            "status": self.status,
            "mse": self.mse,
            "objective": self.objective,
            "m_hat": self.m_hat,
            "support_size": self.support_size,
        }
        by_t = {b.t: b for b in self.bounds}
        for t in t_values:
            b = by_t.get(float(t))
            out[f"bound_t{t:g}"] = b.bound if b else math.nan
            out[f"bound_at_truth_t{t:g}"] = b.bound_at_truth if b else math.nan
            out[f"satisfied_t{t:g}"] = (int(b.satisfied) if b else "")
        out["wall_time"] = self.wall_time
        return out


def make_truth(config):
    g = config.generator
    tseed = derive_seed(config.seed, 0)
    if g.type == "dsbm":
        return generate_dsbm(g.n, g.L, g.m, g.n0, g.family, g.aleph1, g.aleph2, g.within,
                             g.between, g.nu0, g.K0, g.epsilon, g.basis, tseed, g.time_constant,
                             g.bounds)
    if g.type == "constant":
        return constant_truth(g.n, g.L, g.value)
    spec = GraphonSpec.from_dict(g.spec)
    if g.zeta == "grid":
        zeta = np.arange(1, g.n + 1) / g.n
    else:
        zeta = np.random.default_rng(tseed).random(g.n)
    return graphon_tensor(spec, zeta, g.L)


def _truth_lam(truth):
    return truth.lam if isinstance(truth, DSBMTruth) else truth


def run_replicate(config, truth, r):
    seed = derive_seed(config.seed, 1, r)
    rec = ResultRecord(replicate=r, seed=seed)
    start = time.perf_counter()
    try:
        lam = _truth_lam(truth)
        n, _, L = lam.shape
        data = lam if config.noiseless else sample_adjacency(lam, seed)
        fit_seed = derive_seed(config.seed, 2, r)
        g = config.generator
        s = config.estimator
        if g.type == "graphon":
            res = fit_graphon(data, GraphonFitConfig(
                m_max=s.m_max, m_min=s.m_min, basis=s.basis, search=s.search,
                restarts=s.restarts, seed=fit_seed, penalty_scale=s.penalty_scale))
        else:
            n0 = g.n0 if g.type == "dsbm" else 0
            cfg = estimator_config(s, n0, fit_seed)
            res = fit(data, cfg)
        rec.mse = float(np.sum((res.lam - lam) ** 2) / (n * n * L))
        rec.objective = float(res.objective)
        rec.m_hat = int(res.m)
        rec.support_size = int(len(res.support))
        if isinstance(truth, DSBMTruth):
            spec = estimator_config(s, g.n0 if g.type == "dsbm" else 0, fit_seed).penalty_spec(n, L)
            rec.bounds = [oracle_inequality_check(rec.mse, truth, t, spec) for t in config.t_values]
    except Exception as exc:  # recorded, the run continues
        rec.status = f"error: {type(exc).__name__}: {exc}"
    rec.wall_time = time.perf_counter() - start
    return rec


def _run_one(args):
    config_json, r = args
    config = ExperimentConfig.model_validate_json(config_json)
    return run_replicate(config, make_truth(config), r)


def run_experiment(config, csv_path=None, json_path=None):
    """Run all replicates; returns ``(records, summary)`` and optionally writes files."""
    if not isinstance(config, ExperimentConfig):
        config = ExperimentConfig.model_validate(config)
    if config.workers > 1:
        payload = config.model_dump_json()
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_one, [(payload, r) for r in range(config.replicates)]))
    else:
        truth = make_truth(config)
        records = [run_replicate(config, truth, r) for r in range(config.replicates)]
    records.sort(key=lambda rec: rec.replicate)
    summary = summarize(records, config)
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            fh.write(records_to_csv(records, config.t_values))
    if json_path:
        with open(json_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
    return records, summary


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(records, t_values):
    rows = [rec.row(t_values) for rec in records]
    cols = list(ResultRecord(replicate=0, seed=0).row(t_values).keys())
    buf = _io.StringIO()
    buf.write(f"# {CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def coverage_allowance(t, R):
    p = min(1.0, 9 * math.exp(-t))
    return p + 3 * math.sqrt(p * (1 - p) / R)


def summarize(records, config):
    ok = [r for r in records if r.status == "ok"]
    mses = np.array([r.mse for r in ok])
    out = {
        "schema_version": SCHEMA_VERSION,
        "csv_version": CSV_VERSION,
        "name": config.name,
        "replicates": len(records),
        "failed": len(records) - len(ok),
        "mse_mean": float(mses.mean()) if ok else None,
        "mse_median": float(np.median(mses)) if ok else None,
        "m_hat_counts": {str(k): int(v) for k, v in
                         zip(*np.unique([r.m_hat for r in ok], return_counts=True))} if ok else {},
        "coverage": [],
    }
    for t in config.t_values:
        flags = [b.satisfied for r in ok for b in r.bounds if b.t == float(t)]
        if not flags:
            continue
        viol = len(flags) - int(np.sum(flags))
        allowed = coverage_allowance(t, len(flags))
        bounds = [b for r in ok for b in r.bounds if b.t == float(t)]
        out["coverage"].append({
            "t": float(t),
            "violations": viol,
            "frequency": viol / len(flags),
            "allowed": allowed,
            "passed": viol / len(flags) <= allowed,
            "bound_median": float(np.median([b.bound for b in bounds])),
            "bias_at_truth": float(bounds[0].bias_at_truth),
            "penalty_at_truth": float(bounds[0].penalty_at_truth),
        })
    return out


# ---------------------------------------------------------------------------
# rate sweeps

def loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def rate_sweep(config, param="n", values=(16, 32, 64), n_boot=1000, boot_seed=0):
    """Median mse across a grid of ``n`` or ``L`` and its log-log slope.

    The slope interval is a percentile bootstrap over replicates.
    """
    values = list(values)
    if len(values) < 3 or len(set(values)) != len(values):
        raise ValueError("rate sweep needs at least three distinct grid points")
    if param not in ("n", "L"):
        raise ValueError("param must be 'n' or 'L'")
    base = config if isinstance(config, ExperimentConfig) else ExperimentConfig.model_validate(config)
    per_point = []
    for v in values:
        gen = base.generator.model_copy(update={param: int(v)})
        cfg = base.model_copy(update={"generator": gen})
        records, _ = run_experiment(cfg)
        mses = np.array([r.mse for r in records if r.status == "ok"])
        per_point.append(mses)
    medians = np.array([np.median(m) for m in per_point])
    x = np.array(values, dtype=float)
    positive = bool(np.all(medians > 0))
    slope = loglog_slope(x, medians) if positive else math.nan
    rng = np.random.default_rng(boot_seed)
    boots = []
    if positive:
        for _ in range(n_boot):
            med = [np.median(rng.choice(m, size=m.size)) for m in per_point]
            if min(med) > 0:
                boots.append(loglog_slope(x, med))
    ci = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5))) if boots \
        else (math.nan, math.nan)
    return {
        "param": param,
        "values": values,
        "medians": medians.tolist(),
        "slope": slope,
        "slope_ci": ci,
        "strictly_decreasing": bool(np.all(np.diff(medians) < 0)),
        "nonincreasing": bool(np.all(np.diff(medians) <= 0)),
        "mse": [m.tolist() for m in per_point],
    }
