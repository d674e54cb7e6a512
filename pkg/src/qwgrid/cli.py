"""Command-line entry point: ``qwgrid <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 invariant violation, 4 resource guard.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np

from qwgrid import analytic, search, spectral
from qwgrid.errors import DegeneratePairError, PoleError, ResourceLimitError, UsageError
from qwgrid.grid import GridGeometry, MarkedSet
from qwgrid.reports import RunConfig, write_csv, write_json


class InvariantViolation(RuntimeError):
    pass


def _parse_site(text: str):
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"bad site {text!r}; expected x,y") from None
    return (x, y)


def _parse_sizes(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad size list {text!r}") from None


def _radius_rule(args) -> search.RadiusRule:
    return search.RadiusRule(args.radius, args.eps if args.radius == "epsilon-box" else None)


def _check(cond: bool, what: str) -> None:
    if not cond:
        raise InvariantViolation(what)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_simulate(args) -> int:
    geom = GridGeometry(args.n)
    marked = MarkedSet(tuple(_parse_site(s) for s in (args.marked or ["0,0"])))
    strategy = search.Strategy.parse(args.strategy)
    rule = _radius_rule(args)
    out = Path(args.out_dir)
    cfg = RunConfig(
        subcommand="simulate",
        n=geom.n,
        marked=[list(s) for s in marked],
        strategy=str(strategy),
        radius_rule=str(rule),
        eps=args.eps,
        outputs={"profile": str(out / "profile.csv"), "result": str(out / "result.json")},
        workers=args.workers,
    )
    t0 = time.perf_counter()
    res = search.run_search(geom, marked, strategy)
    _log(f"simulate n={geom.n}: {res.t_max} steps in {time.perf_counter() - t0:.2f}s")

    total = float(res.profile.total_prob.sum())
    _check(abs(total - 1.0) < 1e-9, f"profile total probability {total!r} != 1")
    _check(res.norm_drift < 1e-8, f"norm drift {res.norm_drift!r} >= 1e-8")

    write_csv(
        out / "profile.csv",
        "profile",
        cfg,
        ("radius", "total_prob", "site_count", "mean_prob"),
        res.profile.rows(),
    )
    radius = rule.radius(geom)
    payload = res.to_dict()
    payload.update(
        {
            "radius_rule": str(rule),
            "radius": radius,
            "neighborhood_prob": res.neighborhood_probability(rule),
            "uniform_baseline": search.uniform_neighborhood_baseline(geom, radius),
            "t_first_peak": res.first_peak(),
        }
    )
    write_json(out / "result.json", "search_result", cfg, payload)
    print(
        f"n={geom.n} t_star={res.t_star} pr0={res.profile.pr0:.6g} "
        f"nbhd_prob(R={radius})={payload['neighborhood_prob']:.6g}"
    )
    return 0


def cmd_sweep(args) -> int:
    sizes = _parse_sizes(args.sizes)
    rule = _radius_rule(args)
    strategy = search.Strategy.parse(args.strategy)
    cfg = RunConfig(
        subcommand="sweep",
        sizes=sizes,
        marked=[[0, 0]],
        strategy=str(strategy),
        radius_rule=str(rule),
        eps=args.eps,
        trials=args.trials,
        master_seed=args.seed,
        outputs={"sweep": args.out},
        workers=args.workers,
    )
    rows = search.scaling_sweep(sizes, rule, args.trials, args.seed, strategy, args.workers)
    header = list(search.SweepRow.COLUMNS)
    if args.trials == 0:
        header.remove("success")

    def row(r):
        vals = [r.n, r.t_star, r.pr0, r.nbhd_prob, r.pr0_lnN]
        return vals + ([r.success] if args.trials else [])

    write_csv(args.out, "sweep", cfg, header, [row(r) for r in rows])
    for r in rows:
        print(" ".join(f"{h}={v}" for h, v in zip(header, row(r))))
    return 0


def cmd_analytic(args) -> int:
    out = Path(args.out_dir)
    cfg = RunConfig(subcommand="analytic", n=args.n, sizes=_parse_sizes(args.sizes), outputs={})
    if args.n:
        geom = GridGeometry(args.n)
        kind = "fprime" if args.table == "fprime" else "f"
        table = analytic.f_table(geom, kind, cache_dir=args.cache_dir)
        values = table.g() if args.table == "g" else table.values
        path = out / f"{args.table}_table_{geom.n}.csv"
        cfg.outputs["table"] = str(path)
        rows = ((j, jp, float(values[j, jp])) for j in range(geom.n) for jp in range(geom.n))
        write_csv(path, f"{args.table}_table", cfg, ("j", "jp", "value"), rows)
        _check(np.allclose(table.values, table.values.T, atol=1e-9 * max(1.0, np.abs(table.values).max())),
               "table is not symmetric")
    if cfg.sizes:
        path = out / "claims.csv"
        cfg.outputs["claims"] = str(path)
        rows = analytic.claims_sweep(cfg.sizes)
        write_csv(path, "claims", cfg, ("quantity", "n", "param", "value", "reference", "error"), rows)
        for q, n, p, v, ref, err in rows:
            print(f"{q:<13} n={n:<5} {p:<18} value={v:.6g} error={err:.6g}")
    return 0


def cmd_spectrum(args) -> int:
    geom = GridGeometry(args.n)
    cfg = RunConfig(subcommand="spectrum", n=geom.n, outputs={"report": args.out})
    check = spectral.verify_eigenpairs(geom, dense=not args.no_dense)
    payload = {"eigen": check.to_dict()}
    tmin, tmax = spectral.min_max_theta(geom)
    payload["theta_min"], payload["theta_max"] = tmin, tmax
    if args.compare:
        cg = GridGeometry(args.compare)
        cfg.marked = [[0, 0]]
        res = search.run_search(cg, MarkedSet.of((0, 0)), search.Strategy.parse(args.strategy))
        cfg.strategy = str(res.strategy)
        payload["prediction"] = spectral.compare_prediction(res)
        l1 = analytic.lemma1_check(res.final_state, res.marked)
        payload["up_amplitude_check"] = l1.to_dict()
    write_json(args.out, "spectrum", cfg, payload)
    print(f"n={geom.n} max eigen residual={check.max_residual:.3g} "
          f"phase mismatch={check.max_phase_mismatch} complete={check.completeness_ok}")
    if "prediction" in payload:
        print(f"prediction overlap (n={args.compare}) = {payload['prediction']['overlap']:.6f}")
    _check(check.max_residual < 1e-10, f"eigen residual {check.max_residual!r} >= 1e-10")
    if check.completeness_ok is not None:
        _check(check.completeness_ok, "dense spectrum does not match the closed form")
    return 0


def cmd_postprocess(args) -> int:
    geom = GridGeometry(args.n)
    marked = MarkedSet(tuple(_parse_site(s) for s in (args.marked or ["0,0"])))
    rule = _radius_rule(args)
    strategy = search.Strategy.parse(args.strategy)
    cfg = RunConfig(
        subcommand="postprocess",
        n=geom.n,
        marked=[list(s) for s in marked],
        strategy=str(strategy),
        radius_rule=str(rule),
        eps=args.eps,
        trials=args.trials,
        master_seed=args.seed,
        outputs={"trials": args.out},
    )
    res = search.run_search(geom, marked, strategy)
    trials = search.postprocess_trials(res, args.trials, rule, args.seed)
    radius = rule.radius(geom)
    write_csv(
        args.out,
        "postprocess",
        cfg,
        ("trial", "x", "y", "direction", "distance", "found", "sites_checked"),
        ((t.trial, t.site[0], t.site[1], t.direction.name, t.distance, t.found, t.sites_checked) for t in trials),
    )
    exact = res.neighborhood_probability(rule)
    rate = sum(t.found for t in trials) / max(1, len(trials))
    print(f"n={geom.n} R={radius} trials={len(trials)} success={rate:.4f} exact={exact:.4f}")
    if rule.metric == "l1":
        bound = 2 * radius * radius + 2 * radius + 1
        _check(all(t.sites_checked <= bound for t in trials), "sites_checked exceeded 2R^2+2R+1")
    return 0


def cmd_selftest(args) -> int:
    from qwgrid.selftest import run_selftest

    return run_selftest(verbose=not args.quiet)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qwgrid", description="Quantum-walk search on the 2D torus.")
    p.add_argument("--workers", type=int, default=search.default_workers(),
                   help="worker processes for sweeps (default: $QWGRID_WORKERS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    def radius_opts(sp):
        sp.add_argument("--radius", default="fourth-root", choices=search.RadiusRule.KINDS)
        sp.add_argument("--eps", type=float, default=None, help="exponent for --radius epsilon-box")

    s = sub.add_parser("simulate", help="one search run -> profile CSV + result JSON")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--marked", action="append", help="marked site x,y (repeatable; default 0,0)")
    s.add_argument("--strategy", default="max-marked", help="max-marked | min-overlap | fixed:T")
    s.add_argument("--out-dir", default=".")
    radius_opts(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="scaling sweep over grid sizes -> CSV")
    s.add_argument("--sizes", required=True, help="comma-separated even sizes >= 8")
    s.add_argument("--trials", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--strategy", default="max-marked")
    s.add_argument("--out", default="sweep.csv")
    radius_opts(s)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("analytic", help="f/f'/g tables and asymptotic error sweeps -> CSV")
    s.add_argument("--n", type=int, default=None, help="table size (omit to skip the table)")
    s.add_argument("--table", default="f", choices=("f", "fprime", "g"))
    s.add_argument("--sizes", default="64,128,256,512", help="ladder for the claims sweep ('' to skip)")
    s.add_argument("--cache-dir", default=None)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_analytic)

    s = sub.add_parser("spectrum", help="eigen verification and prediction comparison -> JSON")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--no-dense", action="store_true", help="skip the dense-matrix oracle")
    s.add_argument("--compare", type=int, default=None, help="grid size for the prediction-vs-simulation check")
    s.add_argument("--strategy", default="max-marked")
    s.add_argument("--out", default="spectrum.json")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("postprocess", help="sampled end-to-end success estimate -> CSV")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--marked", action="append")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--strategy", default="max-marked")
    s.add_argument("--out", default="postprocess.csv")
    radius_opts(s)
    s.set_defaults(func=cmd_postprocess)

    s = sub.add_parser("selftest", help="run the small-n oracle checks")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DegeneratePairError, PoleError) as exc:
        print(f"qwgrid: error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"qwgrid: invariant violated: {exc}", file=sys.stderr)
        return 3
    except ResourceLimitError as exc:
        print(f"qwgrid: resource limit: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
