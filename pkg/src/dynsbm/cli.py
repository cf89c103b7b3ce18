"""Command-line interface: ``dynsbm <subcommand> ...``."""

import argparse
import json
import os
import sys

import numpy as np

from . import io
from .enumeration import OracleLimits
from .estimator import EstimatorConfig, fit
from .generators import generate_dsbm
from .graphon import GraphonFitConfig, fit_graphon, load_graphon_spec, sample_graphon
from .core import sample_adjacency, vectorize
from .harness import ExperimentConfig, rate_sweep, run_experiment
from .oracle import brute_force_fit
from .sparse import SparseConfig, fit_sparse
from .transform import BASES, TemporalBasis, check_h_assumption, get_basis

# hard ceiling for --limits-override
LIMIT_CEILING = {"max_n": 8, "max_m": 4, "max_L": 6, "max_states": 1e9, "max_subset_ml": 16}


def _basis(arg, L):
    if arg in BASES:
        return get_basis(arg, L)
    if os.path.exists(arg):
        b = io.read_basis(arg)
        if b.L != L:
            raise SystemExit(f"basis file has L={b.L}, data has L={L}")
        return b
    raise SystemExit(f"--basis must be one of {sorted(BASES)} or a basis file path")


def _dump(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=float))


def _write_fit(path, res, extra=None):
    info = {"fit": res.summary()}
    if extra:
        info.update(extra)
    io.write_tensor(path, res.lam, kind="f64", extra=info)


def _estimator_args(p):
    p.add_argument("--input", required=True, help="DNT1 adjacency (bits) or f64 tensor")
    p.add_argument("--basis", default="dct", help="basis name or DNT1 basis file")
    p.add_argument("--m-max", type=int, default=3)
    p.add_argument("--m-min", type=int, default=1)
    p.add_argument("--n0", type=int, default=0)
    p.add_argument("--family", choices=["free", "balanced"], default="free")
    p.add_argument("--search", choices=["exhaustive", "heuristic"], default="heuristic")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--penalty-scale", type=float, default=1.0)
    p.add_argument("--j-selection", choices=["auto", "exact-diagonal", "greedy", "exhaustive"],
                   default="auto")
    p.add_argument("--out", help="output DNT1 f64 estimate (diagnostics in the JSON sidecar)")


def _config_from(args, L):
    return EstimatorConfig(
        m_max=args.m_max, m_min=args.m_min, n0=args.n0, family=args.family,
        basis=_basis(args.basis, L), search=args.search, restarts=args.restarts,
        seed=args.seed, penalty_scale=args.penalty_scale, j_selection=args.j_selection)


def cmd_gen_data(args):
    truth = generate_dsbm(args.n, args.L, args.m, args.n0, args.family, within=args.within,
                          between=args.between, nu0=args.nu0, K0=args.K0, basis=args.basis,
                          seed=args.seed, time_constant=args.time_constant)
    B = sample_adjacency(truth.lam, args.seed)
    io.write_tensor(args.out, B, kind="bits", extra={
        "generator": "dsbm", "seed": args.seed, "m": args.m,
        "labels": truth.membership.labels.tolist()})
    io.write_tensor(args.out + ".truth", truth.lam, kind="f64", extra={
        "labels": truth.membership.labels.tolist(), "D": truth.D.tolist()})
    _dump({"adjacency": args.out, "truth": args.out + ".truth"})


def cmd_fit(args):
    data = io.read_tensor(args.input)
    cfg = _config_from(args, data.shape[2])
    if args.sparse_rho is not None:
        if args.family != "balanced":
            raise SystemExit("--sparse-rho requires --family balanced")
        res = fit_sparse(data, SparseConfig(rho_n=args.sparse_rho, lambda0=args.lambda0, base=cfg))
    else:
        res = fit(data, cfg)
    if args.out:
        _write_fit(args.out, res)
    _dump(res.summary())


def cmd_oracle(args):
    data = io.read_tensor(args.input)
    n, _, L = data.shape
    limits = OracleLimits()
    if args.limits_override:
        over = json.loads(args.limits_override)
        for k, v in over.items():
            if k not in LIMIT_CEILING:
                raise SystemExit(f"unknown limit {k!r}")
            if v > LIMIT_CEILING[k]:
                raise SystemExit(f"limit {k}={v} exceeds the hard ceiling {LIMIT_CEILING[k]}")
        limits = OracleLimits(**{**limits.__dict__, **over})
    cfg = _config_from(args, L)
    res = brute_force_fit(vectorize(data).astype(float), cfg.cluster_family(n, L),
                          cfg.penalty_spec(n, L), cfg.temporal_basis(L),
                          range(args.m_min, min(args.m_max, n) + 1), limits=limits)
    if args.out:
        _write_fit(args.out, res)
    _dump(res.summary())


def cmd_fit_graphon(args):
    data = io.read_tensor(args.input)
    cfg = GraphonFitConfig(m_max=args.m_max, basis=_basis(args.basis, data.shape[2]),
                           restarts=args.restarts, seed=args.seed, search=args.search,
                           penalty_scale=args.penalty_scale)
    res = fit_graphon(data, cfg)
    summary = res.summary()
    summary["L1"] = res.L1
    if args.out:
        _write_fit(args.out, res, {"L1": res.L1})
    _dump(summary)


def cmd_gen_graphon(args):
    spec = load_graphon_spec(args.spec)
    lam, zeta = sample_graphon(spec, args.n, args.L, args.zeta, args.seed)
    B = sample_adjacency(lam, args.seed)
    io.write_tensor(args.out, B, kind="bits", extra={"generator": "graphon",
                                                     "spec": spec.to_dict(), "seed": args.seed})
    io.write_tensor(args.out + ".truth", lam, kind="f64", extra={"zeta": zeta.tolist()})
    _dump({"adjacency": args.out, "truth": args.out + ".truth"})


def cmd_experiment(args):
    cfg = ExperimentConfig.from_file(args.config)
    if args.sweep:
        param, _, vals = args.sweep.partition("=")
        rep = rate_sweep(cfg, param.strip(), [int(v) for v in vals.split(",")])
        if args.json:
            with open(args.json, "w") as fh:
                json.dump(rep, fh, indent=2, sort_keys=True)
        _dump({k: v for k, v in rep.items() if k != "mse"})
        return
    _, summary = run_experiment(cfg, csv_path=args.csv, json_path=args.json)
    _dump(summary)


def cmd_check_basis(args):
    if args.basis in BASES:
        if args.L is None:
            raise SystemExit("--L is required for a named basis")
        H = get_basis(args.basis, args.L)
    else:
        H = io.read_basis(args.basis)
    rep = check_h_assumption(H)
    _dump({"L": H.L, "e1_ok": rep.e1_ok, "entry_bound_ok": rep.entry_bound_ok,
           "binary_sup_ok": rep.binary_sup_ok, "binary_exhaustive": rep.binary_exhaustive,
           "max_entry": rep.max_entry, "worst_binary_excess": rep.worst_binary_excess})
    return 0 if rep.all_ok else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="dynsbm", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="simulate a DSBM and write DNT1 files")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n0", type=int, default=0)
    p.add_argument("--family", choices=["free", "balanced"], default="balanced")
    p.add_argument("--within", type=float, default=0.7)
    p.add_argument("--between", type=float, default=0.3)
    p.add_argument("--nu0", type=float, default=1.0)
    p.add_argument("--K0", type=float, default=0.05)
    p.add_argument("--basis", default="dct", choices=sorted(BASES))
    p.add_argument("--time-constant", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("fit", help="penalized least-squares DSBM fit")
    _estimator_args(p)
    p.add_argument("--sparse-rho", type=float, help="use the sparse penalty with this rho_n")
    p.add_argument("--lambda0", type=float, default=1.0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("oracle", help="brute-force global optimum on tiny inputs")
    _estimator_args(p)
    p.add_argument("--limits-override", help='JSON object, e.g. \'{"max_n": 7}\'')
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("fit-graphon", help="graphon fit with truncation selection")
    p.add_argument("--input", required=True)
    p.add_argument("--basis", default="dct")
    p.add_argument("--m-max", type=int, default=3)
    p.add_argument("--search", choices=["exhaustive", "heuristic"], default="heuristic")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--penalty-scale", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit_graphon)

    p = sub.add_parser("gen-graphon", help="sample a dynamic graphon")
    p.add_argument("--spec", required=True, help="JSON graphon spec")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--zeta", choices=["uniform", "grid"], default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_graphon)

    p = sub.add_parser("experiment", help="run a Monte-Carlo experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--csv")
    p.add_argument("--json")
    p.add_argument("--sweep", help="rate sweep, e.g. n=16,32,64")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("check-basis", help="check a temporal basis")
    p.add_argument("--basis", default="dct")
    p.add_argument("--L", type=int)
    p.set_defaults(func=cmd_check_basis)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    code = args.func(args)
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
